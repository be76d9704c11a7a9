#include <cmath>
#include <functional>
#include <vector>

#include "allocrl/errors.hpp"
#include "allocrl/nn.hpp"
#include "allocrl/rng.hpp"
#include "allocrl/tensor.hpp"
#include "doctest.h"
#include "oracles/oracle_fd_grad.hpp"

using namespace allocrl;

namespace {

// Autodiff gradient of f(params) vs central differences through the same f.
void check_gradient(const std::function<Tensor(const Tensor&)>& build, int rows, int cols,
                    std::vector<double> init, double tol = 1e-6) {
  Tensor leaf(rows, cols, init, true);
  Tensor out = build(leaf);
  REQUIRE(out.size() == 1);
  leaf.zero_grad();
  out.backward();
  const std::vector<double> got = leaf.grad();

  const auto fd = oracle::finite_difference_gradient(
      [&](const std::vector<double>& p) {
        Tensor x(rows, cols, p, false);
        return build(x).item();
      },
      init);
  REQUIRE(got.size() == fd.size());
  CHECK(oracle::relative_error(got, fd) < tol);
}

}  // namespace

TEST_CASE("elementwise op values") {
  Tensor a(1, 3, {1.0, -2.0, 3.0});
  Tensor b(1, 3, {0.5, 1.0, -1.0});
  CHECK(add(a, b).values() == std::vector<double>{1.5, -1.0, 2.0});
  CHECK(sub(a, b).values() == std::vector<double>{0.5, -3.0, 4.0});
  CHECK(mul(a, b).values() == std::vector<double>{0.5, -2.0, -3.0});
  CHECK(neg(a).values() == std::vector<double>{-1.0, 2.0, -3.0});
  CHECK(scale(a, 2.0).values() == std::vector<double>{2.0, -4.0, 6.0});
  CHECK(offset(a, 1.0).values() == std::vector<double>{2.0, -1.0, 4.0});
  CHECK(square(a).values() == std::vector<double>{1.0, 4.0, 9.0});
  CHECK(relu(a).values() == std::vector<double>{1.0, 0.0, 3.0});
  CHECK(sum(a).item() == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(mean(a).item() == doctest::Approx(2.0 / 3).epsilon(1e-15));
  CHECK(exp(Tensor::scalar(0.0)).item() == 1.0);
  CHECK(log(Tensor::scalar(std::exp(1.0))).item() == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(tanh(Tensor::scalar(0.5)).item() == doctest::Approx(std::tanh(0.5)).epsilon(1e-15));
}

TEST_CASE("broadcasting: scalar anywhere, row vector down rows") {
  Tensor m(2, 2, {1, 2, 3, 4});
  Tensor s = Tensor::scalar(10);
  CHECK(add(m, s).values() == std::vector<double>{11, 12, 13, 14});
  CHECK(add(s, m).values() == std::vector<double>{11, 12, 13, 14});
  Tensor row(1, 2, {10, 20});
  CHECK(add(m, row).values() == std::vector<double>{11, 22, 13, 24});
  CHECK(mul(row, m).values() == std::vector<double>{10, 40, 30, 80});
  CHECK_THROWS_AS(add(m, Tensor(2, 3, {1, 2, 3, 4, 5, 6})), ShapeMismatch);
}

TEST_CASE("matmul values and shape checks") {
  Tensor a(2, 3, {1, 2, 3, 4, 5, 6});
  Tensor b(3, 2, {7, 8, 9, 10, 11, 12});
  const Tensor c = matmul(a, b);
  REQUIRE(c.rows() == 2);
  REQUIRE(c.cols() == 2);
  CHECK(c.values() == std::vector<double>{58, 64, 139, 154});
  CHECK_THROWS_AS(matmul(a, a), ShapeMismatch);
}

TEST_CASE("structural ops") {
  Tensor m(2, 3, {1, 2, 3, 4, 5, 6});
  CHECK(sum_cols(m).values() == std::vector<double>{6, 15});
  CHECK(slice_cols(m, 1, 2).values() == std::vector<double>{2, 3, 5, 6});
  Tensor n(2, 1, {9, 10});
  CHECK(concat_cols(m, n).values() == std::vector<double>{1, 2, 3, 9, 4, 5, 6, 10});
  const Tensor sm = softmax_rows(Tensor(1, 2, {std::log(2.0), 0.0}));
  CHECK(sm.values()[0] == doctest::Approx(2.0 / 3).epsilon(1e-14));
  CHECK(sm.values()[1] == doctest::Approx(1.0 / 3).epsilon(1e-14));
}

TEST_CASE("min_elem picks the first operand on ties") {
  Tensor a(1, 2, {1.0, 5.0}, true);
  Tensor b(1, 2, {1.0, 3.0}, true);
  Tensor out = sum(min_elem(a, b));
  a.zero_grad();
  b.zero_grad();
  out.backward();
  CHECK(a.grad() == std::vector<double>{1.0, 0.0});  // tie at index 0 goes to a
  CHECK(b.grad() == std::vector<double>{0.0, 1.0});
}

TEST_CASE("clamp passes gradient only inside the interval") {
  Tensor x(1, 3, {-2.0, 0.5, 2.0}, true);
  Tensor out = sum(clamp(x, -1.0, 1.0));
  x.zero_grad();
  out.backward();
  CHECK(x.grad() == std::vector<double>{0.0, 1.0, 0.0});
  CHECK(clamp(x, -1.0, 1.0).values() == std::vector<double>{-1.0, 0.5, 1.0});
}

TEST_CASE("detach blocks the reverse sweep") {
  Tensor x(1, 1, {2.0}, true);
  Tensor out = mul(detach(square(x)), x);  // d/dx should be x^2 only
  x.zero_grad();
  out.backward();
  CHECK(x.grad()[0] == doctest::Approx(4.0).epsilon(1e-14));
}

TEST_CASE("gradients match central differences") {
  check_gradient([](const Tensor& x) { return sum(square(tanh(x))); }, 2, 3,
                 {0.3, -0.7, 1.1, 0.9, -0.2, 0.4});
  check_gradient([](const Tensor& x) { return mean(exp(scale(x, 0.5))); }, 1, 4,
                 {0.1, -0.3, 0.7, 0.2});
  check_gradient([](const Tensor& x) { return sum(log(offset(square(x), 1.0))); }, 1, 3,
                 {0.5, -0.4, 1.2});
  // relu evaluated away from its kink
  check_gradient([](const Tensor& x) { return sum(relu(x)); }, 1, 4, {0.5, -0.6, 1.5, -2.0});
  check_gradient(
      [](const Tensor& x) {
        Tensor w(3, 2, {0.2, -0.1, 0.4, 0.3, -0.5, 0.6});
        return sum(square(matmul(x, w)));
      },
      2, 3, {0.3, 0.1, -0.2, 0.7, -0.4, 0.5});
  check_gradient([](const Tensor& x) { return sum(square(softmax_rows(x))); }, 2, 3,
                 {0.3, -0.2, 0.5, 1.0, 0.2, -0.7});
  check_gradient(
      [](const Tensor& x) {
        return sum(mul(slice_cols(x, 0, 2), slice_cols(x, 1, 2)));
      },
      2, 3, {0.3, -0.2, 0.5, 1.0, 0.2, -0.7});
  check_gradient(
      [](const Tensor& x) {
        Tensor other = Tensor::constant(2, 2, 0.25);
        return sum(min_elem(square(x), other));
      },
      2, 2, {0.3, -0.9, 0.1, 0.8});
  check_gradient([](const Tensor& x) { return sum(sum_cols(square(x))); }, 3, 2,
                 {0.3, -0.9, 0.1, 0.8, 0.6, -0.4});
  check_gradient(
      [](const Tensor& x) {
        return sum(square(concat_cols(x, square(x))));
      },
      2, 2, {0.4, -0.3, 0.8, 0.2});
}

TEST_CASE("quadratic advantage: one-dimensional closed form") {
  // A = -0.5 * exp(2*l) * d^2
  const double l = 0.3, d = 0.7;
  Tensor lraw(1, 1, {l}, true);
  Tensor diff(1, 1, {d}, true);
  Tensor a = quadratic_advantage(lraw, diff);
  CHECK(a.item() == doctest::Approx(-0.5 * std::exp(2 * l) * d * d).epsilon(1e-14));
  lraw.zero_grad();
  diff.zero_grad();
  a.backward();
  CHECK(lraw.grad()[0] == doctest::Approx(-std::exp(2 * l) * d * d).epsilon(1e-12));
  CHECK(diff.grad()[0] == doctest::Approx(-std::exp(2 * l) * d).epsilon(1e-12));
}

TEST_CASE("quadratic advantage: batch gradient vs finite differences") {
  // two assets -> 3 packed lower-triangle entries per row
  check_gradient(
      [](const Tensor& x) {
        Tensor lraw = slice_cols(x, 0, 3);
        Tensor d = slice_cols(x, 3, 2);
        return sum(quadratic_advantage(lraw, d));
      },
      2, 5, {0.2, -0.4, 0.1, 0.7, -0.3, -0.1, 0.5, 0.3, -0.6, 0.2});
  // value is negative semidefinite by construction
  Rng rng(5);
  for (int k = 0; k < 50; ++k) {
    std::vector<double> lv(6), dv(3);
    for (auto& v : lv) v = rng.uniform(-1, 1);
    for (auto& v : dv) v = rng.uniform(-1, 1);
    Tensor a = quadratic_advantage(Tensor(1, 6, lv), Tensor(1, 3, dv));
    CHECK(a.item() <= 1e-15);
  }
}

TEST_CASE("leaf gradients accumulate across graphs until zero_grad") {
  Tensor x(1, 1, {3.0}, true);
  x.zero_grad();
  square(x).backward();
  CHECK(x.grad()[0] == doctest::Approx(6.0).epsilon(1e-14));
  square(x).backward();
  CHECK(x.grad()[0] == doctest::Approx(12.0).epsilon(1e-14));
  x.zero_grad();
  CHECK(x.grad()[0] == 0.0);
}

TEST_CASE("adam takes the textbook first step") {
  Tensor p(1, 2, {1.0, -2.0}, true);
  Adam opt({p}, {.lr = 0.1});
  Tensor loss = sum(p);  // gradient = 1 per element
  opt.zero_grad();
  loss.backward();
  opt.step();
  // mhat/(sqrt(vhat)+eps) = 1/(1+1e-8) on step one
  CHECK(p.values()[0] == doctest::Approx(1.0 - 0.1).epsilon(1e-7));
  CHECK(p.values()[1] == doctest::Approx(-2.0 - 0.1).epsilon(1e-7));
}

TEST_CASE("adam converges on a quadratic") {
  Tensor p(1, 1, {5.0}, true);
  Adam opt({p}, {.lr = 0.05});
  for (int i = 0; i < 2000; ++i) {
    Tensor loss = square(offset(p, -1.5));  // minimum at 1.5
    opt.zero_grad();
    loss.backward();
    opt.step();
  }
  CHECK(p.values()[0] == doctest::Approx(1.5).epsilon(1e-4));
}

TEST_CASE("soft and hard target updates") {
  Tensor t(1, 2, {0.0, 4.0}, true);
  Tensor s(1, 2, {2.0, 0.0}, true);
  std::vector<Tensor> target{t}, source{s};
  soft_update(target, source, 0.5);
  CHECK(t.values() == std::vector<double>{1.0, 2.0});
  hard_update(target, source);
  CHECK(t.values() == std::vector<double>{2.0, 0.0});
}

TEST_CASE("clip_grad_norm rescales to the cap and reports the raw norm") {
  Tensor p(1, 2, {0.0, 0.0}, true);
  p.zero_grad();
  Tensor loss = sum(mul(p, Tensor(1, 2, {3.0, 4.0})));
  loss.backward();
  std::vector<Tensor> params{p};
  const double norm = clip_grad_norm(params, 1.0);
  CHECK(norm == doctest::Approx(5.0).epsilon(1e-12));
  CHECK(p.grad()[0] == doctest::Approx(0.6).epsilon(1e-12));
  CHECK(p.grad()[1] == doctest::Approx(0.8).epsilon(1e-12));
  // under the cap: untouched
  p.zero_grad();
  sum(mul(p, Tensor(1, 2, {0.3, 0.4}))).backward();
  const double small = clip_grad_norm(params, 1.0);
  CHECK(small == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(p.grad()[0] == doctest::Approx(0.3).epsilon(1e-12));
}
