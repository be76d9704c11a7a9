#include "allocrl/agents.hpp"

#include <cmath>
#include <utility>

#include "allocrl/errors.hpp"

namespace allocrl {

std::vector<double> flatten_observation(const Observation& obs) {
  const auto& w = obs.window;
  std::vector<double> out(static_cast<std::size_t>(w.size()));
  std::size_t k = 0;
  for (int i = 0; i < w.rows(); ++i)
    for (int j = 0; j < w.cols(); ++j) out[k++] = w(i, j);
  return out;
}

Eigen::MatrixXd extend_window_with_cash(const Eigen::MatrixXd& window, bool cash_last) {
  if (!cash_last) return window;
  Eigen::MatrixXd out(window.rows(), window.cols() + 1);
  out.leftCols(window.cols()) = window;
  out.col(window.cols()).setZero();
  return out;
}

void BuyAndHoldAgent::begin_episode(const Observation& obs) {
  frozen_ = buy_and_hold_weights(extend_window_with_cash(obs.window, cash_last_));
}

Eigen::VectorXd MarkowitzAgent::act(const Observation& obs, bool) {
  return markowitz_weights(extend_window_with_cash(obs.window, cash_last_), cfg_);
}

Tensor stack_rows(const std::vector<std::vector<double>>& rows) {
  const int b = static_cast<int>(rows.size());
  const int d = b > 0 ? static_cast<int>(rows.front().size()) : 0;
  std::vector<double> flat;
  flat.reserve(static_cast<std::size_t>(b) * d);
  for (const auto& r : rows) {
    if (static_cast<int>(r.size()) != d) throw ShapeMismatch("ragged row stack");
    flat.insert(flat.end(), r.begin(), r.end());
  }
  return Tensor(b, d, std::move(flat));
}

Tensor column(const std::vector<double>& v) {
  return Tensor(static_cast<int>(v.size()), 1, v);
}

Tensor reinforce_loss(const GaussianPolicy& policy, const Tensor& states,
                      const Tensor& actions, const std::vector<double>& returns_to_go,
                      int num_episodes) {
  Tensor lp = policy.log_prob(states, actions);
  return scale(sum(mul(lp, column(returns_to_go))), -1.0 / num_episodes);
}

Tensor a2c_actor_loss(const GaussianPolicy& policy, const Tensor& states,
                      const Tensor& actions, const std::vector<double>& td_errors,
                      double entropy_beta) {
  Tensor lp = policy.log_prob(states, actions);
  Tensor loss = neg(mean(mul(lp, column(td_errors))));
  if (entropy_beta != 0.0) loss = sub(loss, scale(policy.entropy(), entropy_beta));
  return loss;
}

Tensor trpo_surrogate(const GaussianPolicy& policy, const Tensor& states,
                      const Tensor& actions, const std::vector<double>& old_log_probs,
                      const std::vector<double>& advantages) {
  Tensor lp = policy.log_prob(states, actions);
  Tensor ratio = exp(sub(lp, column(old_log_probs)));
  return mean(mul(ratio, column(advantages)));
}

Tensor ppo_clip_loss(const GaussianPolicy& policy, const Tensor& states,
                     const Tensor& actions, const std::vector<double>& old_log_probs,
                     const std::vector<double>& advantages, double clip_eps) {
  Tensor lp = policy.log_prob(states, actions);
  Tensor ratio = exp(sub(lp, column(old_log_probs)));
  Tensor adv = column(advantages);
  Tensor unclipped = mul(ratio, adv);
  Tensor clipped = mul(clamp(ratio, 1.0 - clip_eps, 1.0 + clip_eps), adv);
  return neg(mean(min_elem(unclipped, clipped)));
}

std::vector<double> conjugate_gradient(
    const std::function<std::vector<double>(const std::vector<double>&)>& apply_A,
    const std::vector<double>& b, int iterations, double tol) {
  const std::size_t n = b.size();
  auto dot = [n](const std::vector<double>& u, const std::vector<double>& v) {
    double s = 0;
    for (std::size_t i = 0; i < n; ++i) s += u[i] * v[i];
    return s;
  };
  std::vector<double> x(n, 0.0), r = b, p = b;
  double rs = dot(r, r);
  for (int it = 0; it < iterations && rs > tol; ++it) {
    std::vector<double> ap = apply_A(p);
    double pap = dot(p, ap);
    if (pap <= 0) break;  // operator lost positive definiteness; keep current x
    double alpha = rs / pap;
    for (std::size_t i = 0; i < n; ++i) {
      x[i] += alpha * p[i];
      r[i] -= alpha * ap[i];
    }
    double rs_next = dot(r, r);
    double beta = rs_next / rs;
    for (std::size_t i = 0; i < n; ++i) p[i] = r[i] + beta * p[i];
    rs = rs_next;
  }
  return x;
}

AdvantageEstimate gae_over_batch(const std::vector<Transition>& batch, const Mlp& value,
                                 double gamma, double lambda) {
  AdvantageEstimate out;
  const std::size_t n = batch.size();
  out.advantages.reserve(n);
  out.returns.reserve(n);
  out.values.reserve(n);
  std::size_t seg_start = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!batch[i].done && i + 1 < n) continue;
    // segment [seg_start, i]
    std::vector<double> rewards, values;
    for (std::size_t j = seg_start; j <= i; ++j) {
      rewards.push_back(batch[j].reward);
      values.push_back(value.forward_values(batch[j].state)[0]);
    }
    values.push_back(batch[i].done ? 0.0 : value.forward_values(batch[i].next_state)[0]);
    const auto adv = gae_advantages(rewards, values, gamma, lambda);
    for (std::size_t j = 0; j < adv.size(); ++j) {
      out.advantages.push_back(adv[j]);
      out.returns.push_back(adv[j] + values[j]);
      out.values.push_back(values[j]);
    }
    seg_start = i + 1;
  }
  return out;
}

void normalize_in_place(std::vector<double>& x) {
  if (x.size() < 2) {
    for (double& v : x) v = 0;
    return;
  }
  double mean = 0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(x.size());
  double ss = 0;
  for (double v : x) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / static_cast<double>(x.size() - 1));
  for (double& v : x) v = (v - mean) / (sd + 1e-10);
}

void train_agent(Agent& agent, TradingEnv& env, long timesteps) {
  long steps = 0;
  while (steps < timesteps) {
    Observation obs = env.reset();
    agent.begin_episode(obs);
    bool done = false;
    while (!done && steps < timesteps) {
      Eigen::VectorXd a = agent.act(obs, true);
      StepResult res = env.step(a);
      Transition t;
      t.state = flatten_observation(obs);
      t.action.assign(a.data(), a.data() + a.size());
      t.reward = res.reward;
      t.next_state = flatten_observation(res.observation);
      t.done = res.done;
      agent.observe(t);
      obs = std::move(res.observation);
      done = res.done;
      ++steps;
    }
    agent.end_episode();
  }
}

EvaluationResult evaluate_agent(Agent& agent, TradingEnv& env, std::optional<int> start) {
  EvaluationResult out;
  Observation obs = start ? env.reset_at(*start) : env.reset();
  agent.begin_episode(obs);
  out.equity.push_back(env.portfolio_value());
  std::vector<Eigen::VectorXd> weight_rows;
  while (!env.done()) {
    Eigen::VectorXd a = agent.act(obs, false);
    StepResult res = env.step(a);
    out.equity.push_back(res.info.portfolio_value);
    out.step_log_returns.push_back(res.info.realized_log_return);
    weight_rows.push_back(res.info.weights);
    obs = std::move(res.observation);
  }
  out.weights.resize(static_cast<int>(weight_rows.size()), env.action_dim());
  for (std::size_t i = 0; i < weight_rows.size(); ++i)
    out.weights.row(static_cast<int>(i)) = weight_rows[i].transpose();
  return out;
}

}  // namespace allocrl
