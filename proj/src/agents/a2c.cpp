#include <utility>

#include "allocrl/agents.hpp"

namespace allocrl {

A2cAgent::A2cAgent(int state_dim, int action_dim, A2cConfig cfg, std::uint64_t seed)
    : state_dim_(state_dim),
      action_dim_(action_dim),
      cfg_(cfg),
      rng_(mix_seed(seed, "a2c")),
      policy_({{state_dim, cfg.hidden, cfg.hidden, action_dim}, Activation::Relu}, rng_),
      critic_({{state_dim + action_dim, cfg.hidden, cfg.hidden, 1}, Activation::Relu}, rng_),
      actor_opt_(policy_.parameters(), {cfg.actor_lr}),
      critic_opt_(critic_.parameters(), {cfg.critic_lr}) {}

Eigen::VectorXd A2cAgent::act(const Observation& obs, bool explore) {
  const std::vector<double> s = flatten_observation(obs);
  if (!explore) return to_vector(policy_.mean_values(s));
  return to_vector(policy_.sample(s, rng_).sample);
}

double A2cAgent::q_value(const std::vector<double>& state,
                         const std::vector<double>& action) const {
  std::vector<double> sa = state;
  sa.insert(sa.end(), action.begin(), action.end());
  return critic_.forward_values(sa)[0];
}

void A2cAgent::observe(const Transition& t) {
  rollout_.push_back(t);
  if (static_cast<int>(rollout_.size()) >= cfg_.rollout_steps) update();
}

void A2cAgent::end_episode() { update(); }

void A2cAgent::update() {
  if (rollout_.empty()) return;
  const int b = static_cast<int>(rollout_.size());
  std::vector<double> sflat, aflat, targets(b), td_errors(b);
  sflat.reserve(static_cast<std::size_t>(b) * state_dim_);
  aflat.reserve(static_cast<std::size_t>(b) * action_dim_);
  for (int i = 0; i < b; ++i) {
    const Transition& t = rollout_[i];
    sflat.insert(sflat.end(), t.state.begin(), t.state.end());
    aflat.insert(aflat.end(), t.action.begin(), t.action.end());
    targets[i] = t.reward;
    if (!t.done) {
      // SARSA-style bootstrap: Q at the next state under a fresh policy draw
      const std::vector<double> a_next = policy_.sample(t.next_state, rng_).sample;
      targets[i] += cfg_.gamma * q_value(t.next_state, a_next);
    }
    td_errors[i] = targets[i] - q_value(t.state, t.action);
  }
  Tensor s(b, state_dim_, std::move(sflat));
  Tensor a(b, action_dim_, std::move(aflat));

  Tensor critic_loss = mean(square(sub(critic_.forward(concat_cols(s, a)), column(targets))));
  critic_opt_.zero_grad();
  critic_loss.backward();
  clip_grad_norm(critic_.parameters(), cfg_.max_grad_norm);
  critic_opt_.step();

  Tensor actor_loss = a2c_actor_loss(policy_, s, a, td_errors, cfg_.entropy_beta);
  actor_opt_.zero_grad();
  actor_loss.backward();
  auto policy_params = policy_.parameters();
  clip_grad_norm(policy_params, cfg_.max_grad_norm);
  actor_opt_.step();

  rollout_.clear();
}

void A2cAgent::save(const std::filesystem::path& dir) const {
  save_tensors(dir / "policy.ckpt", policy_.named_parameters("policy"));
  save_tensors(dir / "critic.ckpt", critic_.named_parameters("critic"));
}

void A2cAgent::load(const std::filesystem::path& dir) {
  restore_all(policy_.named_parameters("policy"), load_tensors(dir / "policy.ckpt"));
  restore_all(critic_.named_parameters("critic"), load_tensors(dir / "critic.ckpt"));
}

}  // namespace allocrl
