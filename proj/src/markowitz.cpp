#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "allocrl/baselines.hpp"
#include "allocrl/errors.hpp"

namespace allocrl {

namespace {

constexpr double kFeasTol = 1e-9;
constexpr double kDualTol = 1e-10;

// Solves the equality-constrained subproblem: min w' S w over the free set,
// pinned variables fixed at zero. Returns false when the KKT system is
// numerically inconsistent for this working set.
bool solve_eqp(const Eigen::MatrixXd& sigma, const Eigen::MatrixXd& constraints,
               const Eigen::VectorXd& rhs, const std::vector<bool>& pinned,
               Eigen::VectorXd* w_out, Eigen::VectorXd* lambda_out) {
  const int m = static_cast<int>(sigma.rows());
  const int nc = static_cast<int>(constraints.rows());
  std::vector<int> free_idx;
  for (int i = 0; i < m; ++i)
    if (!pinned[i]) free_idx.push_back(i);
  const int nf = static_cast<int>(free_idx.size());
  if (nf == 0) return false;

  Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(nf + nc, nf + nc);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(nf + nc);
  for (int a = 0; a < nf; ++a)
    for (int c = 0; c < nf; ++c) kkt(a, c) = 2.0 * sigma(free_idx[a], free_idx[c]);
  for (int r = 0; r < nc; ++r)
    for (int a = 0; a < nf; ++a) {
      kkt(nf + r, a) = constraints(r, free_idx[a]);
      kkt(a, nf + r) = constraints(r, free_idx[a]);
    }
  for (int r = 0; r < nc; ++r) b[nf + r] = rhs[r];

  Eigen::FullPivLU<Eigen::MatrixXd> lu(kkt);
  const Eigen::VectorXd sol = lu.solve(b);
  if (!((kkt * sol - b).lpNorm<Eigen::Infinity>() < 1e-7)) return false;

  Eigen::VectorXd w = Eigen::VectorXd::Zero(m);
  for (int a = 0; a < nf; ++a) w[free_idx[a]] = sol[a];
  *w_out = w;
  // convention: stationarity reads 2 S w - C' lambda - nu = 0
  *lambda_out = -sol.tail(nc);
  return true;
}

}  // namespace

Eigen::VectorXd markowitz_solve(const Eigen::MatrixXd& sigma, const Eigen::VectorXd& mu,
                                double mu_target) {
  const int m = static_cast<int>(mu.size());
  if (m < 1) throw NotEnoughData("markowitz needs at least one asset");
  if (sigma.rows() != m || sigma.cols() != m)
    throw NotEnoughData("covariance shape does not match the mean vector");
  for (int i = 0; i < m; ++i) {
    if (!std::isfinite(mu[i])) throw Infeasible("non-finite expected return");
    for (int j = 0; j < m; ++j)
      if (!std::isfinite(sigma(i, j))) throw Infeasible("non-finite covariance entry");
  }
  const double lo = mu.minCoeff(), hi = mu.maxCoeff();
  if (mu_target < lo - kFeasTol || mu_target > hi + kFeasTol)
    throw Infeasible("target return " + std::to_string(mu_target) + " outside [" +
                     std::to_string(lo) + ", " + std::to_string(hi) + "]");
  const double target = std::clamp(mu_target, lo, hi);

  // drop the return constraint when it is redundant with the budget constraint
  const bool mu_spread = (hi - lo) > 1e-12;
  const int nc = mu_spread ? 2 : 1;
  Eigen::MatrixXd constraints(nc, m);
  Eigen::VectorXd rhs(nc);
  constraints.row(0).setOnes();
  rhs[0] = 1.0;
  if (mu_spread) {
    constraints.row(1) = mu.transpose();
    rhs[1] = target;
  }

  // feasible start: mix of the extreme-return corners hitting the target
  Eigen::VectorXd w = Eigen::VectorXd::Zero(m);
  if (mu_spread) {
    int i_lo = 0, i_hi = 0;
    mu.minCoeff(&i_lo);
    mu.maxCoeff(&i_hi);
    const double t = (target - lo) / (hi - lo);
    w[i_hi] = t;
    w[i_lo] += 1.0 - t;
  } else {
    w = uniform_weights(m);
  }

  std::vector<bool> pinned(m);
  for (int i = 0; i < m; ++i) pinned[i] = w[i] < kFeasTol;

  Eigen::VectorXd w_star, lambda;
  for (int iter = 0; iter < 50 * (m + 2); ++iter) {
    if (!solve_eqp(sigma, constraints, rhs, pinned, &w_star, &lambda)) {
      // ridge retry against a semidefinite or rank-deficient working set
      Eigen::MatrixXd ridged = sigma;
      ridged.diagonal().array() += 1e-12;
      if (!solve_eqp(ridged, constraints, rhs, pinned, &w_star, &lambda))
        throw Infeasible("markowitz KKT system is singular");
    }

    double min_free = 0.0;
    for (int i = 0; i < m; ++i)
      if (!pinned[i]) min_free = std::min(min_free, w_star[i]);

    if (min_free >= -kFeasTol) {
      w = w_star;
      // dual feasibility of the pinned bounds: nu_i = (2 S w - C' lambda)_i >= 0
      const Eigen::VectorXd grad = 2.0 * sigma * w - constraints.transpose() * lambda;
      int worst = -1;
      double worst_nu = -kDualTol;
      for (int i = 0; i < m; ++i)
        if (pinned[i] && grad[i] < worst_nu) {
          worst_nu = grad[i];
          worst = i;
        }
      if (worst < 0) {
        for (int i = 0; i < m; ++i) w[i] = std::max(w[i], 0.0);
        return w;
      }
      pinned[worst] = false;
      continue;
    }

    // blocked: step from w toward w_star until the first free variable hits 0
    double alpha = 1.0;
    int blocker = -1;
    for (int i = 0; i < m; ++i) {
      if (pinned[i] || w_star[i] >= -kFeasTol) continue;
      const double a = w[i] / (w[i] - w_star[i]);
      if (a < alpha) {
        alpha = a;
        blocker = i;
      }
    }
    if (blocker < 0) {
      w = w_star;
      continue;
    }
    w += alpha * (w_star - w);
    w[blocker] = 0.0;
    pinned[blocker] = true;
  }
  throw Infeasible("markowitz active-set iteration limit reached");
}

}  // namespace allocrl
