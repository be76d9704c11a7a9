#include <algorithm>
#include <cmath>
#include <utility>

#include "allocrl/agents.hpp"

namespace allocrl {

namespace {

std::vector<double> clamped_log_std_values(const GaussianPolicy& p) {
  std::vector<double> ls = const_cast<GaussianPolicy&>(p).log_std_param().values();
  for (double& v : ls) v = std::clamp(v, kLogStdMin, kLogStdMax);
  return ls;
}

}  // namespace

PpoAgent::PpoAgent(int state_dim, int action_dim, PpoConfig cfg, std::uint64_t seed)
    : state_dim_(state_dim),
      action_dim_(action_dim),
      cfg_(cfg),
      rng_(mix_seed(seed, "ppo")),
      policy_({{state_dim, cfg.hidden, cfg.hidden, action_dim}, Activation::Relu}, rng_),
      value_({{state_dim, cfg.hidden, cfg.hidden, 1}, Activation::Relu}, rng_),
      policy_opt_(policy_.parameters(), {cfg.learning_rate}),
      value_opt_(value_.parameters(), {cfg.learning_rate}) {}

Eigen::VectorXd PpoAgent::act(const Observation& obs, bool explore) {
  const std::vector<double> s = flatten_observation(obs);
  if (!explore) return to_vector(policy_.mean_values(s));
  return to_vector(policy_.sample(s, rng_).sample);
}

void PpoAgent::observe(const Transition& t) {
  if (episode_steps_ >= cfg_.max_timesteps_per_episode) return;  // per-episode cap
  ++episode_steps_;
  batch_.push_back(t);
  logp_buf_.push_back(gaussian_log_prob_value(policy_.mean_values(t.state),
                                              clamped_log_std_values(policy_), t.action));
  if (static_cast<int>(batch_.size()) >= cfg_.timesteps_per_batch) update();
}

void PpoAgent::end_episode() { episode_steps_ = 0; }

void PpoAgent::update() {
  const int b = static_cast<int>(batch_.size());
  if (b == 0) return;

  AdvantageEstimate est = gae_over_batch(batch_, value_, cfg_.gamma, cfg_.gae_lambda);
  normalize_in_place(est.advantages);

  std::vector<double> sflat, aflat;
  sflat.reserve(static_cast<std::size_t>(b) * state_dim_);
  aflat.reserve(static_cast<std::size_t>(b) * action_dim_);
  for (const Transition& t : batch_) {
    sflat.insert(sflat.end(), t.state.begin(), t.state.end());
    aflat.insert(aflat.end(), t.action.begin(), t.action.end());
  }
  Tensor s(b, state_dim_, std::move(sflat));
  Tensor a(b, action_dim_, std::move(aflat));
  Tensor ret = column(est.returns);

  for (int it = 0; it < cfg_.n_updates; ++it) {
    Tensor policy_loss = ppo_clip_loss(policy_, s, a, logp_buf_, est.advantages, cfg_.clip);
    policy_opt_.zero_grad();
    policy_loss.backward();
    policy_opt_.step();

    Tensor value_loss = mean(square(sub(value_.forward(s), ret)));
    value_opt_.zero_grad();
    value_loss.backward();
    value_opt_.step();
  }
  batch_.clear();
  logp_buf_.clear();
}

void PpoAgent::save(const std::filesystem::path& dir) const {
  save_tensors(dir / "policy.ckpt", policy_.named_parameters("policy"));
  save_tensors(dir / "value.ckpt", value_.named_parameters("value"));
}

void PpoAgent::load(const std::filesystem::path& dir) {
  restore_all(policy_.named_parameters("policy"), load_tensors(dir / "policy.ckpt"));
  restore_all(value_.named_parameters("value"), load_tensors(dir / "value.ckpt"));
}

}  // namespace allocrl
