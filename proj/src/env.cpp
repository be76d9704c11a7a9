#include "allocrl/env.hpp"

#include <cmath>

#include "allocrl/errors.hpp"

namespace allocrl {

namespace {
constexpr double kDsrFloor = 1e-8;
constexpr double kSimplexTol = 1e-8;
}  // namespace

std::pair<double, DsrState> differential_sharpe(double log_return, const DsrState& state,
                                                double alpha) {
  const double dx = log_return - state.x;
  const double dy = log_return * log_return - state.y;
  const double variance = std::max(state.y - state.x * state.x, 0.0);
  const double denom = std::max(std::pow(variance, 1.5), kDsrFloor);
  const double reward = (state.y * dx - 0.5 * state.x * dy) / denom;
  DsrState next;
  next.x = state.x + alpha * dx;
  next.y = state.y + alpha * dy;
  return {reward, next};
}

Eigen::VectorXd TradingEnv::project_softmax(const Eigen::VectorXd& raw) {
  for (int i = 0; i < raw.size(); ++i)
    if (!std::isfinite(raw[i])) throw NonFiniteAction("raw action contains a non-finite value");
  const double m = raw.maxCoeff();
  Eigen::VectorXd e = (raw.array() - m).exp();
  return e / e.sum();
}

void TradingEnv::validate_simplex(const Eigen::VectorXd& w) {
  double sum = 0;
  for (int i = 0; i < w.size(); ++i) {
    if (!std::isfinite(w[i])) throw NonFiniteAction("weights contain a non-finite value");
    if (w[i] < -kSimplexTol)
      throw NotOnSimplex("negative weight " + std::to_string(w[i]));
    sum += w[i];
  }
  if (std::abs(sum - 1.0) > kSimplexTol)
    throw NotOnSimplex("weights sum to " + std::to_string(sum));
}

Eigen::VectorXd TradingEnv::project_action(const Eigen::VectorXd& raw) const {
  if (raw.size() != action_dim())
    throw LengthMismatch("action has " + std::to_string(raw.size()) + " entries, expected " +
                         std::to_string(action_dim()));
  if (cfg_.add_softmax) return project_softmax(raw);
  validate_simplex(raw);
  return raw;
}

Eigen::VectorXd TradingEnv::drift_weights(const Eigen::VectorXd& prev,
                                          const Eigen::VectorXd& asset_log_returns,
                                          bool cash_last) {
  const int assets = static_cast<int>(asset_log_returns.size());
  if (prev.size() != assets + (cash_last ? 1 : 0))
    throw LengthMismatch("weight/return dimension mismatch in drift");
  Eigen::VectorXd grown = prev;
  for (int i = 0; i < assets; ++i) grown[i] = prev[i] * std::exp(asset_log_returns[i]);
  // cash leg (if any) grows by exp(0) = 1
  const double total = grown.sum();
  return grown / total;
}

double TradingEnv::turnover(const Eigen::VectorXd& target, const Eigen::VectorXd& drifted,
                            bool cash_last) {
  if (target.size() != drifted.size())
    throw LengthMismatch("weight dimension mismatch in turnover");
  const int charged = static_cast<int>(target.size()) - (cash_last ? 1 : 0);
  double t = 0;
  for (int i = 0; i < charged; ++i) t += std::abs(target[i] - drifted[i]);
  return t;
}

double TradingEnv::portfolio_log_return(const Eigen::VectorXd& w,
                                        const Eigen::VectorXd& asset_log_returns,
                                        bool cash_last, bool exact_compounding) {
  const int assets = static_cast<int>(asset_log_returns.size());
  if (w.size() != assets + (cash_last ? 1 : 0))
    throw LengthMismatch("weight/return dimension mismatch in reward");
  if (exact_compounding) {
    double growth = cash_last ? w[assets] : 0.0;
    for (int i = 0; i < assets; ++i) growth += w[i] * std::exp(asset_log_returns[i]);
    return std::log(growth);
  }
  double dot = 0;  // cash contributes zero either way
  for (int i = 0; i < assets; ++i) dot += w[i] * asset_log_returns[i];
  return std::log1p(dot);
}

TradingEnv::TradingEnv(Eigen::MatrixXd returns, EnvConfig cfg)
    : returns_(std::move(returns)), cfg_(cfg), rng_(mix_seed(cfg.seed, "env")) {
  if (cfg_.lookback < 1) throw ConfigError("lookback must be >= 1");
  if (cfg_.episode_length < 1) throw ConfigError("episode_length must be >= 1");
  if (cfg_.trading_cost_ratio < 0) throw ConfigError("trading_cost_ratio must be >= 0");
  if (cfg_.initial_investment <= 0) throw ConfigError("initial_investment must be > 0");
  if (cfg_.random_start_range < 0) throw ConfigError("random_start_range must be >= 0");
  if (!(cfg_.dsr_alpha > 0) || cfg_.dsr_alpha > 1)
    throw ConfigError("dsr_alpha must be in (0, 1]");
  if (returns_.cols() < 1) throw DataTooShort("need at least one asset");
  for (int r = 0; r < returns_.rows(); ++r)
    for (int c = 0; c < returns_.cols(); ++c)
      if (!std::isfinite(returns_(r, c))) throw DataTooShort("non-finite return in history");
  // every admissible start must leave at least one realizable return row
  const int max_start = cfg_.lookback + cfg_.random_start_range;
  if (max_start > static_cast<int>(returns_.rows()) - 1)
    throw DataTooShort("history has " + std::to_string(returns_.rows()) +
                       " return rows; starts up to " + std::to_string(max_start) +
                       " need at least " + std::to_string(max_start + 1));
}

Observation TradingEnv::observation_at(int index) const {
  Observation obs;
  obs.window = returns_.middleRows(index - cfg_.lookback, cfg_.lookback);
  return obs;
}

void TradingEnv::start_episode(int start) {
  if (start < cfg_.lookback || start > static_cast<int>(returns_.rows()) - 1)
    throw DataTooShort("episode start " + std::to_string(start) + " out of range");
  index_ = start;
  steps_ = 0;
  done_ = false;
  value_ = cfg_.initial_investment;
  prev_weights_ = Eigen::VectorXd::Constant(action_dim(), 1.0 / action_dim());
  // warm-start the reward moments from the uniform portfolio over the window,
  // so the first differential-Sharpe rewards are scaled sensibly
  dsr_ = DsrState{};
  for (int t = index_ - cfg_.lookback; t < index_; ++t) {
    const double lr = portfolio_log_return(prev_weights_, returns_.row(t).transpose(),
                                           cfg_.retain_cash, cfg_.exact_compounding);
    dsr_.x += lr;
    dsr_.y += lr * lr;
  }
  dsr_.x /= cfg_.lookback;
  dsr_.y /= cfg_.lookback;
}

Observation TradingEnv::reset() {
  start_episode(cfg_.lookback + (cfg_.random_start_range > 0
                                     ? rng_.uniform_int(0, cfg_.random_start_range)
                                     : 0));
  return observation_at(index_);
}

Observation TradingEnv::reset_at(int start) {
  start_episode(start);
  return observation_at(index_);
}

StepResult TradingEnv::step(const Eigen::VectorXd& raw_action) {
  if (done_) throw EpisodeFinished("step() after the episode ended");
  const Eigen::VectorXd w = project_action(raw_action);
  const Eigen::VectorXd drifted =
      drift_weights(prev_weights_, returns_.row(index_ - 1).transpose(), cfg_.retain_cash);
  const double turn = turnover(w, drifted, cfg_.retain_cash);
  const double cost = cfg_.trading_cost_ratio * turn;
  const double gross = portfolio_log_return(w, returns_.row(index_).transpose(),
                                            cfg_.retain_cash, cfg_.exact_compounding);
  const double net = gross - cost;
  value_ *= std::exp(net);

  double reward = net;
  if (!cfg_.use_log_return_reward) {
    auto [r, next] = differential_sharpe(net, dsr_, cfg_.dsr_alpha);
    reward = r;
    dsr_ = next;
  }

  prev_weights_ = w;
  ++index_;
  ++steps_;
  done_ = steps_ >= cfg_.episode_length || index_ >= static_cast<int>(returns_.rows());

  StepResult out;
  out.observation = observation_at(index_);
  out.reward = reward;
  out.done = done_;
  out.info = StepInfo{value_, net, turn, cost, w};
  return out;
}

}  // namespace allocrl
