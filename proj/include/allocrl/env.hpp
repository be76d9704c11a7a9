#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <utility>

#include "allocrl/rng.hpp"

namespace allocrl {

struct EnvConfig {
  int episode_length = 252;
  bool use_log_return_reward = true;  // false = differential Sharpe reward
  double trading_cost_ratio = 0.0;
  int lookback = 64;
  double initial_investment = 1.0;
  bool retain_cash = true;   // appends a zero-log-return cash leg to the action
  int random_start_range = 0;
  double dsr_alpha = 0.05;
  bool add_softmax = true;   // project raw actions; false = caller supplies simplex points
  bool exact_compounding = false;  // ln(sum w_i e^{r_i}) instead of ln(1 + w.r)
  std::uint64_t seed = 0;
};

// Streaming first/second moment estimates behind the differential Sharpe reward.
struct DsrState {
  double x = 0;  // exponentially weighted mean of the return stream
  double y = 0;  // exponentially weighted mean of its square
};

// Reward from the pre-update state, then the alpha-smoothed moment update.
// Denominator floored at 1e-8; variance clamped at zero against FP jitter.
std::pair<double, DsrState> differential_sharpe(double log_return, const DsrState& state,
                                                double alpha);

struct Observation {
  Eigen::MatrixXd window;  // lookback x assets of log-returns, most recent row last
};

struct StepInfo {
  double portfolio_value = 0;
  double realized_log_return = 0;  // after trading costs
  double turnover = 0;
  double cost = 0;
  Eigen::VectorXd weights;  // simplex point actually held this step
};

struct StepResult {
  Observation observation;
  double reward = 0;
  bool done = false;
  StepInfo info;
};

// Asset-allocation episode over a fixed log-return history. Actions are raw
// score vectors projected onto the simplex (or pre-projected simplex points
// when add_softmax=false); the last component is cash when retain_cash.
class TradingEnv {
 public:
  TradingEnv(Eigen::MatrixXd returns, EnvConfig cfg);

  Observation reset();              // start drawn from [lookback, lookback+range]
  Observation reset_at(int start);  // fixed start, for deterministic evaluation
  StepResult step(const Eigen::VectorXd& raw_action);

  int num_assets() const { return static_cast<int>(returns_.cols()); }
  int action_dim() const { return num_assets() + (cfg_.retain_cash ? 1 : 0); }
  int lookback() const { return cfg_.lookback; }
  bool done() const { return done_; }
  double portfolio_value() const { return value_; }
  const DsrState& dsr_state() const { return dsr_; }
  const EnvConfig& config() const { return cfg_; }
  int current_index() const { return index_; }

  // weights -> simplex per config (softmax projection or strict validation)
  Eigen::VectorXd project_action(const Eigen::VectorXd& raw) const;

  static Eigen::VectorXd project_softmax(const Eigen::VectorXd& raw);
  static void validate_simplex(const Eigen::VectorXd& w);

  // Weights after the market moves by `asset_log_returns` (cash leg fixed at
  // zero log-return when cash_last).
  static Eigen::VectorXd drift_weights(const Eigen::VectorXd& prev,
                                       const Eigen::VectorXd& asset_log_returns,
                                       bool cash_last);

  // L1 distance between target and drifted weights over the charged legs
  // (cash rebalancing is free).
  static double turnover(const Eigen::VectorXd& target, const Eigen::VectorXd& drifted,
                         bool cash_last);

  // Portfolio log-return before costs for holding `w` over one step.
  static double portfolio_log_return(const Eigen::VectorXd& w,
                                     const Eigen::VectorXd& asset_log_returns,
                                     bool cash_last, bool exact_compounding);

 private:
  Observation observation_at(int index) const;
  void start_episode(int start);

  Eigen::MatrixXd returns_;
  EnvConfig cfg_;
  Rng rng_;
  Eigen::VectorXd prev_weights_;
  DsrState dsr_;
  double value_ = 0;
  int index_ = 0;  // next return row to be realized
  int steps_ = 0;
  bool done_ = true;
};

}  // namespace allocrl
