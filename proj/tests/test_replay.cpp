#include <set>
#include <vector>

#include "allocrl/errors.hpp"
#include "allocrl/replay.hpp"
#include "doctest.h"

using namespace allocrl;

namespace {

Transition make_transition(double tag) {
  Transition t;
  t.state = {tag};
  t.action = {tag};
  t.reward = tag;
  t.next_state = {tag + 0.5};
  t.done = false;
  return t;
}

}  // namespace

TEST_CASE("replay buffer grows then evicts FIFO") {
  ReplayBuffer buf(3);
  CHECK(buf.size() == 0);
  CHECK(buf.capacity() == 3);
  for (int i = 0; i < 3; ++i) buf.push(make_transition(i));
  CHECK(buf.size() == 3);
  buf.push(make_transition(3));  // overwrites the oldest slot
  CHECK(buf.size() == 3);
  Rng rng(1);
  std::set<double> rewards;
  for (int k = 0; k < 100; ++k)
    for (const Transition* t : buf.sample(3, rng)) rewards.insert(t->reward);
  CHECK(rewards == std::set<double>{1.0, 2.0, 3.0});
}

TEST_CASE("a sample never repeats a slot") {
  ReplayBuffer buf(10);
  for (int i = 0; i < 10; ++i) buf.push(make_transition(i));
  Rng rng(2);
  for (int k = 0; k < 200; ++k) {
    const auto batch = buf.sample(7, rng);
    std::set<const Transition*> unique(batch.begin(), batch.end());
    CHECK(unique.size() == 7);
  }
}

TEST_CASE("sampling more than stored throws") {
  ReplayBuffer buf(5);
  buf.push(make_transition(0));
  Rng rng(3);
  CHECK_THROWS_AS(buf.sample(2, rng), BufferTooSmall);
  CHECK_THROWS_AS(ReplayBuffer(4).sample(1, rng), BufferTooSmall);
}

TEST_CASE("ou noise decays by 1 - theta per step") {
  OuNoise noise(1, 0.15, 1.0);
  Rng rng_a(4), rng_b(4);
  noise.reset();
  CHECK(noise.value()[0] == 0.0);
  const double z0 = rng_b.gaussian(), z1 = rng_b.gaussian();
  CHECK(noise.step(rng_a)[0] == doctest::Approx(z0).epsilon(1e-14));
  // x + theta*(0 - x) + z: the prior state survives with weight 0.85
  CHECK(noise.step(rng_a)[0] == doctest::Approx(0.85 * z0 + z1).epsilon(1e-14));
  noise.reset();
  CHECK(noise.value()[0] == 0.0);
}

TEST_CASE("ou noise adds sigma-scaled gaussian steps") {
  OuNoise noise(2, 0.15, 0.3);
  Rng rng_a(5), rng_b(5);
  noise.reset();
  const auto& step1 = noise.step(rng_a);
  const double z0 = rng_b.gaussian(), z1 = rng_b.gaussian();
  CHECK(step1[0] == doctest::Approx(0.3 * z0).epsilon(1e-14));
  CHECK(step1[1] == doctest::Approx(0.3 * z1).epsilon(1e-14));
}

TEST_CASE("rewards to go discount correctly") {
  const auto g = rewards_to_go({1.0, 1.0, 1.0}, 0.5);
  REQUIRE(g.size() == 3);
  CHECK(g[0] == doctest::Approx(1.75).epsilon(1e-15));
  CHECK(g[1] == doctest::Approx(1.5).epsilon(1e-15));
  CHECK(g[2] == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(rewards_to_go({}, 0.9).empty());
}

TEST_CASE("gae advantages: two-step hand computation") {
  // r = (1, 0), V = (0, 1, 0), gamma = 1, lambda = 0.5
  // delta = (1+1-0, 0+0-1) = (2, -1); A1 = -1; A0 = 2 + 0.5*(-1) = 1.5
  const auto a = gae_advantages({1.0, 0.0}, {0.0, 1.0, 0.0}, 1.0, 0.5);
  REQUIRE(a.size() == 2);
  CHECK(a[0] == doctest::Approx(1.5).epsilon(1e-15));
  CHECK(a[1] == doctest::Approx(-1.0).epsilon(1e-15));
}

TEST_CASE("gae with lambda 1 reduces to discounted returns minus baseline") {
  const std::vector<double> r = {0.3, -0.2, 0.5, 0.1};
  const std::vector<double> v = {0.1, 0.4, -0.3, 0.2, 0.0};
  const double gamma = 0.9;
  const auto a = gae_advantages(r, v, gamma, 1.0);
  double running = 0;
  std::vector<double> expected(r.size());
  for (int t = static_cast<int>(r.size()) - 1; t >= 0; --t) {
    running = r[t] + gamma * running;
    const double tail = running + std::pow(gamma, r.size() - t) * v.back();
    expected[t] = tail - v[t];
  }
  for (std::size_t i = 0; i < r.size(); ++i)
    CHECK(a[i] == doctest::Approx(expected[i]).epsilon(1e-12));
}
