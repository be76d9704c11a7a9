#include <utility>

#include "allocrl/agents.hpp"

namespace allocrl {

ReinforceAgent::ReinforceAgent(int state_dim, int action_dim, ReinforceConfig cfg,
                               std::uint64_t seed)
    : state_dim_(state_dim),
      action_dim_(action_dim),
      cfg_(cfg),
      rng_(mix_seed(seed, "reinforce")),
      policy_({{state_dim, cfg.hidden, action_dim}, Activation::Relu}, rng_),
      opt_(policy_.parameters(), {cfg.learning_rate}) {}

Eigen::VectorXd ReinforceAgent::act(const Observation& obs, bool explore) {
  const std::vector<double> s = flatten_observation(obs);
  if (!explore) return to_vector(policy_.mean_values(s));
  return to_vector(policy_.sample(s, rng_).sample);
}

void ReinforceAgent::observe(const Transition& t) {
  current_.states.insert(current_.states.end(), t.state.begin(), t.state.end());
  current_.actions.insert(current_.actions.end(), t.action.begin(), t.action.end());
  current_.rewards.push_back(t.reward);
  ++current_.steps;
}

void ReinforceAgent::end_episode() {
  if (current_.steps == 0) return;
  pending_.push_back(std::move(current_));
  current_ = {};
  if (static_cast<int>(pending_.size()) >= cfg_.episodes_per_update) update();
}

void ReinforceAgent::update() {
  int total = 0;
  for (const auto& ep : pending_) total += ep.steps;
  std::vector<double> states, actions, rtg;
  states.reserve(static_cast<std::size_t>(total) * state_dim_);
  actions.reserve(static_cast<std::size_t>(total) * action_dim_);
  rtg.reserve(total);
  for (const auto& ep : pending_) {
    states.insert(states.end(), ep.states.begin(), ep.states.end());
    actions.insert(actions.end(), ep.actions.begin(), ep.actions.end());
    const auto g = rewards_to_go(ep.rewards, cfg_.gamma);
    rtg.insert(rtg.end(), g.begin(), g.end());
  }
  Tensor s(total, state_dim_, std::move(states));
  Tensor a(total, action_dim_, std::move(actions));
  Tensor loss = reinforce_loss(policy_, s, a, rtg, static_cast<int>(pending_.size()));
  opt_.zero_grad();
  loss.backward();
  opt_.step();
  last_loss_ = loss.item();
  pending_.clear();
}

void ReinforceAgent::save(const std::filesystem::path& dir) const {
  save_tensors(dir / "policy.ckpt", policy_.named_parameters("policy"));
}

void ReinforceAgent::load(const std::filesystem::path& dir) {
  restore_all(policy_.named_parameters("policy"), load_tensors(dir / "policy.ckpt"));
}

}  // namespace allocrl
