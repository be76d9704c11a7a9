#include "allocrl/replay.hpp"

#include <unordered_set>

#include "allocrl/errors.hpp"

namespace allocrl {

ReplayBuffer::ReplayBuffer(std::size_t capacity) {
  if (capacity == 0) throw BufferTooSmall("replay capacity must be positive");
  data_.resize(capacity);
}

void ReplayBuffer::push(Transition t) {
  data_[next_] = std::move(t);
  next_ = (next_ + 1) % data_.size();
  if (next_ == 0) full_ = true;
}

std::vector<const Transition*> ReplayBuffer::sample(std::size_t n, Rng& rng) const {
  const std::size_t sz = size();
  if (n == 0 || n > sz)
    throw BufferTooSmall("asked for " + std::to_string(n) + " samples, buffer holds " +
                         std::to_string(sz));
  std::vector<const Transition*> out;
  out.reserve(n);
  if (n * 20 < sz) {  // sparse case: rejection sampling of distinct slots
    std::unordered_set<std::size_t> taken;
    while (out.size() < n) {
      const auto i = static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(sz) - 1));
      if (taken.insert(i).second) out.push_back(&data_[i]);
    }
  } else {  // dense case: partial Fisher-Yates
    std::vector<std::size_t> idx(sz);
    for (std::size_t i = 0; i < sz; ++i) idx[i] = i;
    for (std::size_t i = 0; i < n; ++i) {
      const auto j = static_cast<std::size_t>(
          rng.uniform_int(static_cast<int>(i), static_cast<int>(sz) - 1));
      std::swap(idx[i], idx[j]);
      out.push_back(&data_[idx[i]]);
    }
  }
  return out;
}

OuNoise::OuNoise(int dim, double theta, double sigma, double mu)
    : x_(static_cast<std::size_t>(dim), mu), theta_(theta), sigma_(sigma), mu_(mu) {}

void OuNoise::reset() { x_.assign(x_.size(), mu_); }

const std::vector<double>& OuNoise::step(Rng& rng) {
  for (auto& v : x_) v += theta_ * (mu_ - v) + sigma_ * rng.gaussian();
  return x_;
}

std::vector<double> rewards_to_go(const std::vector<double>& rewards, double gamma) {
  std::vector<double> g(rewards.size());
  double acc = 0;
  for (std::size_t i = rewards.size(); i-- > 0;) {
    acc = rewards[i] + gamma * acc;
    g[i] = acc;
  }
  return g;
}

std::vector<double> gae_advantages(const std::vector<double>& rewards,
                                   const std::vector<double>& values, double gamma,
                                   double lambda) {
  if (values.size() != rewards.size() + 1)
    throw LengthMismatch("gae needs len(values) == len(rewards) + 1");
  std::vector<double> adv(rewards.size());
  double acc = 0;
  for (std::size_t i = rewards.size(); i-- > 0;) {
    const double delta = rewards[i] + gamma * values[i + 1] - values[i];
    acc = delta + gamma * lambda * acc;
    adv[i] = acc;
  }
  return adv;
}

}  // namespace allocrl
