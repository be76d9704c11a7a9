#pragma once

#include <Eigen/Dense>

#include "allocrl/rng.hpp"

namespace allocrl {

// Classical allocation rules. All of them emit points on the simplex; the env
// is run with add_softmax=false for these.
Eigen::VectorXd uniform_weights(int dim);

// u_i / sum(u), u ~ U(0,1) iid; redrawn on every call
Eigen::VectorXd random_weights(int dim, Rng& rng);

// softmax over the column means of the lookback window (momentum tilt);
// callers freeze the result for the episode
Eigen::VectorXd buy_and_hold_weights(const Eigen::MatrixXd& window);

Eigen::VectorXd sample_mean(const Eigen::MatrixXd& window);
// (n-1)-normalized sample covariance; rows are observations
Eigen::MatrixXd sample_covariance(const Eigen::MatrixXd& window);

// min w' sigma w  s.t.  sum(w)=1, mu'w = mu_target, w >= 0.
// Throws Infeasible when mu_target lies outside [min mu, max mu]. When all
// mu_i coincide the return constraint is redundant and is dropped.
Eigen::VectorXd markowitz_solve(const Eigen::MatrixXd& sigma, const Eigen::VectorXd& mu,
                                double mu_target);

struct MarkowitzPolicyConfig {
  int num_targets = 50;   // frontier sweep resolution
  double risk_free = 0.0;  // annual, converted like the Sharpe metric
  double ridge = 1e-8;     // added to the covariance diagonal
};

// Sweeps num_targets equally spaced mu_targets across [min mu, max mu] of the
// window means, solves each, and returns the portfolio with the highest
// (w'mu - rf_step) / sqrt(w' sigma w). Falls back to uniform weights when the
// window has no variance at all.
Eigen::VectorXd markowitz_weights(const Eigen::MatrixXd& window,
                                  const MarkowitzPolicyConfig& cfg = {});

}  // namespace allocrl
