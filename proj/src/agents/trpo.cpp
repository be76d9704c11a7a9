#include <algorithm>
#include <cmath>
#include <utility>

#include "allocrl/agents.hpp"
#include "allocrl/errors.hpp"

namespace allocrl {

namespace {

std::vector<double> clamped_log_std_values(const GaussianPolicy& p) {
  std::vector<double> ls = const_cast<GaussianPolicy&>(p).log_std_param().values();
  for (double& v : ls) v = std::clamp(v, kLogStdMin, kLogStdMax);
  return ls;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

TrpoAgent::TrpoAgent(int state_dim, int action_dim, TrpoConfig cfg, std::uint64_t seed)
    : state_dim_(state_dim),
      action_dim_(action_dim),
      cfg_(cfg),
      rng_(mix_seed(seed, "trpo")),
      policy_({{state_dim, cfg.hidden, cfg.hidden, action_dim}, Activation::Tanh}, rng_),
      value_({{state_dim, cfg.hidden, cfg.hidden, 1}, Activation::Tanh}, rng_),
      value_opt_(value_.parameters(), {cfg.learning_rate}) {}

Eigen::VectorXd TrpoAgent::act(const Observation& obs, bool explore) {
  const std::vector<double> s = flatten_observation(obs);
  if (!explore) return to_vector(policy_.mean_values(s));
  return to_vector(policy_.sample(s, rng_).sample);
}

void TrpoAgent::observe(const Transition& t) {
  batch_.push_back(t);
  logp_buf_.push_back(gaussian_log_prob_value(policy_.mean_values(t.state),
                                              clamped_log_std_values(policy_), t.action));
  if (static_cast<int>(batch_.size()) < cfg_.episode_length) return;
  try {
    update_from_batch(batch_);
  } catch (const LineSearchFailed&) {
    // policy already restored; drop the batch and keep collecting
  }
  batch_.clear();
  logp_buf_.clear();
}

void TrpoAgent::end_episode() {}

std::vector<double> TrpoAgent::fisher_vector_product(
    const std::vector<std::vector<double>>& states, const std::vector<double>& v) const {
  const int n_trunk = policy_.trunk().param_count();
  const int n_ls = action_dim_;
  std::vector<double> out(static_cast<std::size_t>(n_trunk) + n_ls, 0.0);

  std::vector<double> inv_var = clamped_log_std_values(policy_);
  for (double& s : inv_var) s = std::exp(-2.0 * s);

  std::vector<double> y, dy, cot(action_dim_);
  for (const auto& s : states) {
    policy_.trunk().jvp(s, v.data(), &y, &dy);
    for (int i = 0; i < action_dim_; ++i) cot[i] = dy[i] * inv_var[i];
    policy_.trunk().vjp(s, cot, out.data());
  }
  const double inv_n = 1.0 / static_cast<double>(states.size());
  for (int i = 0; i < n_trunk; ++i) out[i] *= inv_n;
  // KL Hessian of a state-independent log-std row is exactly 2 per dim.
  for (int i = 0; i < n_ls; ++i) out[n_trunk + i] = 2.0 * v[n_trunk + i];
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += cfg_.damping * v[i];
  return out;
}

double TrpoAgent::update_from_batch(const std::vector<Transition>& batch) {
  const int b = static_cast<int>(batch.size());

  std::vector<std::vector<double>> states;
  states.reserve(b);
  std::vector<double> sflat, aflat;
  sflat.reserve(static_cast<std::size_t>(b) * state_dim_);
  aflat.reserve(static_cast<std::size_t>(b) * action_dim_);
  for (const Transition& t : batch) {
    states.push_back(t.state);
    sflat.insert(sflat.end(), t.state.begin(), t.state.end());
    aflat.insert(aflat.end(), t.action.begin(), t.action.end());
  }

  AdvantageEstimate est = gae_over_batch(batch, value_, cfg_.gamma, cfg_.lambda);
  normalize_in_place(est.advantages);

  // value-function fit on the empirical returns, L2-regularized
  Tensor s(b, state_dim_, std::move(sflat));
  Tensor ret = column(est.returns);
  for (int it = 0; it < cfg_.val_opt_iter; ++it) {
    Tensor loss = mean(square(sub(value_.forward(s), ret)));
    for (const Tensor& p : value_.parameters())
      loss = add(loss, scale(sum(square(p)), cfg_.l2_reg));
    value_opt_.zero_grad();
    loss.backward();
    value_opt_.step();
  }

  // policy step: natural gradient of the importance-sampled objective
  const std::vector<double> old_ls = clamped_log_std_values(policy_);
  std::vector<std::vector<double>> old_means(b);
  std::vector<double> old_logp(b);
  for (int i = 0; i < b; ++i) {
    old_means[i] = policy_.mean_values(batch[i].state);
    old_logp[i] = gaussian_log_prob_value(old_means[i], old_ls, batch[i].action);
  }

  Tensor a(b, action_dim_, std::move(aflat));
  Tensor surrogate = trpo_surrogate(policy_, s, a, old_logp, est.advantages);
  for (Tensor& p : policy_.parameters()) p.zero_grad();
  surrogate.backward();
  std::vector<double> g;
  g.reserve(policy_.param_count());
  for (Tensor& p : policy_.parameters()) {
    if (p.node()->grad.empty()) {
      g.insert(g.end(), static_cast<std::size_t>(p.size()), 0.0);
    } else {
      g.insert(g.end(), p.node()->grad.begin(), p.node()->grad.end());
    }
  }

  auto fvp = [this, &states](const std::vector<double>& v) {
    return fisher_vector_product(states, v);
  };
  const std::vector<double> step_dir = conjugate_gradient(fvp, g, cfg_.cg_iterations);
  const double shs = dot(step_dir, fvp(step_dir));
  if (!(shs > 0)) throw LineSearchFailed("non-positive trust-region curvature");
  const double beta = std::sqrt(2.0 * cfg_.max_kl / shs);

  std::vector<double> old_params(policy_.param_count());
  policy_.flatten_params(old_params.data());
  const double surr_old = surrogate.item();

  std::vector<double> trial(old_params.size());
  double frac = 1.0;
  for (int j = 0; j < cfg_.max_backtracks; ++j, frac *= cfg_.backtrack_coeff) {
    for (std::size_t i = 0; i < trial.size(); ++i)
      trial[i] = old_params[i] + frac * beta * step_dir[i];
    policy_.set_params(trial.data());

    const std::vector<double> new_ls = clamped_log_std_values(policy_);
    double surr_new = 0, kl = 0;
    for (int i = 0; i < b; ++i) {
      const std::vector<double> mu = policy_.mean_values(batch[i].state);
      const double lp = gaussian_log_prob_value(mu, new_ls, batch[i].action);
      surr_new += std::exp(lp - old_logp[i]) * est.advantages[i];
      for (int d = 0; d < action_dim_; ++d) {
        const double dm = old_means[i][d] - mu[d];
        const double var_ratio = std::exp(2.0 * (old_ls[d] - new_ls[d]));
        kl += new_ls[d] - old_ls[d] + 0.5 * (var_ratio - 1.0) +
              0.5 * dm * dm * std::exp(-2.0 * new_ls[d]);
      }
    }
    surr_new /= b;
    kl /= b;
    if (surr_new > surr_old && kl <= cfg_.max_kl) {
      last_kl_ = kl;
      return kl;
    }
  }
  policy_.set_params(old_params.data());
  throw LineSearchFailed("no step satisfied the improvement and KL conditions");
}

void TrpoAgent::save(const std::filesystem::path& dir) const {
  save_tensors(dir / "policy.ckpt", policy_.named_parameters("policy"));
  save_tensors(dir / "value.ckpt", value_.named_parameters("value"));
}

void TrpoAgent::load(const std::filesystem::path& dir) {
  restore_all(policy_.named_parameters("policy"), load_tensors(dir / "policy.ckpt"));
  restore_all(value_.named_parameters("value"), load_tensors(dir / "value.ckpt"));
}

}  // namespace allocrl
