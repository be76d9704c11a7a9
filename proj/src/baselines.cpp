#include "allocrl/baselines.hpp"

#include <cmath>

#include "allocrl/backtest.hpp"
#include "allocrl/errors.hpp"

namespace allocrl {

Eigen::VectorXd uniform_weights(int dim) {
  if (dim < 1) throw NotEnoughData("uniform weights need at least one asset");
  return Eigen::VectorXd::Constant(dim, 1.0 / dim);
}

Eigen::VectorXd random_weights(int dim, Rng& rng) {
  if (dim < 1) throw NotEnoughData("random weights need at least one asset");
  Eigen::VectorXd u(dim);
  for (int i = 0; i < dim; ++i) u[i] = rng.uniform();
  const double s = u.sum();
  if (s <= 0) return uniform_weights(dim);  // virtually impossible, but total mass must be 1
  return u / s;
}

Eigen::VectorXd buy_and_hold_weights(const Eigen::MatrixXd& window) {
  if (window.rows() < 1 || window.cols() < 1)
    throw NotEnoughData("buy-and-hold needs a non-empty window");
  const Eigen::VectorXd m = sample_mean(window);
  const Eigen::ArrayXd e = (m.array() - m.maxCoeff()).exp();
  return (e / e.sum()).matrix();
}

Eigen::VectorXd sample_mean(const Eigen::MatrixXd& window) {
  if (window.rows() < 1) throw NotEnoughData("mean of an empty window");
  return window.colwise().mean().transpose();
}

Eigen::MatrixXd sample_covariance(const Eigen::MatrixXd& window) {
  const int n = static_cast<int>(window.rows());
  if (n < 2) throw NotEnoughData("covariance needs at least two observations");
  const Eigen::MatrixXd centered = window.rowwise() - window.colwise().mean();
  return centered.transpose() * centered / static_cast<double>(n - 1);
}

Eigen::VectorXd markowitz_weights(const Eigen::MatrixXd& window,
                                  const MarkowitzPolicyConfig& cfg) {
  if (cfg.num_targets < 1) throw NotEnoughData("frontier sweep needs at least one target");
  const int m = static_cast<int>(window.cols());
  const Eigen::VectorXd mu = sample_mean(window);
  Eigen::MatrixXd sigma = sample_covariance(window);
  if (sigma.diagonal().maxCoeff() <= 0.0) return uniform_weights(m);  // degenerate frontier
  sigma.diagonal().array() += cfg.ridge;

  const double lo = mu.minCoeff(), hi = mu.maxCoeff();
  const double rf_step = cfg.risk_free / kStepsPerYear;
  Eigen::VectorXd best = uniform_weights(m);
  double best_sharpe = -std::numeric_limits<double>::infinity();
  for (int k = 0; k < cfg.num_targets; ++k) {
    const double target =
        cfg.num_targets == 1 ? lo : lo + (hi - lo) * k / (cfg.num_targets - 1);
    const Eigen::VectorXd w = markowitz_solve(sigma, mu, target);
    const double var = w.dot(sigma * w);
    if (var <= 0) continue;
    const double s = (w.dot(mu) - rf_step) / std::sqrt(var);
    if (s > best_sharpe) {  // strict: first maximizer wins, deterministic
      best_sharpe = s;
      best = w;
    }
  }
  return best;
}

}  // namespace allocrl
