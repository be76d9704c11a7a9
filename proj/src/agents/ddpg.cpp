#include <algorithm>
#include <cmath>
#include <utility>

#include "allocrl/agents.hpp"

namespace allocrl {

namespace {

// Batched (states, actions) -> constant tensors.
std::pair<Tensor, Tensor> batch_sa(const std::vector<const Transition*>& batch, int state_dim,
                                   int action_dim) {
  const int b = static_cast<int>(batch.size());
  std::vector<double> sflat, aflat;
  sflat.reserve(static_cast<std::size_t>(b) * state_dim);
  aflat.reserve(static_cast<std::size_t>(b) * action_dim);
  for (const Transition* t : batch) {
    sflat.insert(sflat.end(), t->state.begin(), t->state.end());
    aflat.insert(aflat.end(), t->action.begin(), t->action.end());
  }
  return {Tensor(b, state_dim, std::move(sflat)), Tensor(b, action_dim, std::move(aflat))};
}

std::vector<double> tanh_all(std::vector<double> v) {
  for (double& x : v) x = std::tanh(x);
  return v;
}

}  // namespace

DdpgAgent::DdpgAgent(int state_dim, int action_dim, DdpgConfig cfg, std::uint64_t seed)
    : state_dim_(state_dim),
      action_dim_(action_dim),
      cfg_(cfg),
      rng_(mix_seed(seed, "ddpg")),
      actor_({{state_dim, cfg.hidden, cfg.hidden, action_dim}, Activation::Relu}, rng_),
      actor_target_(actor_.spec(), rng_),
      critic_({{state_dim + action_dim, cfg.hidden, cfg.hidden, 1}, Activation::Relu}, rng_),
      critic_target_(critic_.spec(), rng_),
      actor_opt_(actor_.parameters(), {cfg.actor_lr}),
      critic_opt_(critic_.parameters(), {cfg.critic_lr}),
      buffer_(static_cast<std::size_t>(cfg.memory_size)),
      noise_(action_dim, cfg.theta, cfg.sigma) {
  hard_update(actor_target_.parameters(), actor_.parameters());
  hard_update(critic_target_.parameters(), critic_.parameters());
}

Eigen::VectorXd DdpgAgent::act(const Observation& obs, bool explore) {
  if (explore && steps_ < cfg_.warmup_steps) {
    Eigen::VectorXd a(action_dim_);
    for (int i = 0; i < action_dim_; ++i) a[i] = rng_.uniform(-1.0, 1.0);
    return a;
  }
  const std::vector<double> a = tanh_all(actor_.forward_values(flatten_observation(obs)));
  Eigen::VectorXd out = to_vector(a);
  if (explore) {
    const auto& n = noise_.step(rng_);
    for (int i = 0; i < action_dim_; ++i)
      out[i] = std::clamp(out[i] + n[i], -1.0, 1.0);
  }
  return out;
}

void DdpgAgent::observe(const Transition& t) {
  buffer_.push(t);
  ++steps_;
  const std::size_t threshold =
      std::max<std::size_t>(cfg_.batch_size, static_cast<std::size_t>(cfg_.warmup_steps));
  if (buffer_.size() < threshold) return;
  update_from_batch(buffer_.sample(cfg_.batch_size, rng_));
}

std::vector<double> DdpgAgent::compute_targets(
    const std::vector<const Transition*>& batch) const {
  std::vector<double> y(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const Transition& t = *batch[i];
    y[i] = t.reward;
    if (t.done) continue;
    std::vector<double> sa = t.next_state;
    const std::vector<double> a = tanh_all(actor_target_.forward_values(t.next_state));
    sa.insert(sa.end(), a.begin(), a.end());
    y[i] += cfg_.gamma * critic_target_.forward_values(sa)[0];
  }
  return y;
}

std::pair<double, double> DdpgAgent::update_from_batch(
    const std::vector<const Transition*>& batch) {
  const auto [s, a] = batch_sa(batch, state_dim_, action_dim_);
  const std::vector<double> targets = compute_targets(batch);

  Tensor q = critic_.forward(concat_cols(s, a));
  Tensor critic_loss = mean(square(sub(q, column(targets))));
  critic_opt_.zero_grad();
  critic_loss.backward();
  critic_opt_.step();

  Tensor a_pi = tanh(actor_.forward(s));
  Tensor actor_loss = neg(mean(critic_.forward(concat_cols(s, a_pi))));
  actor_opt_.zero_grad();
  critic_opt_.zero_grad();  // the actor objective also reaches critic params
  actor_loss.backward();
  actor_opt_.step();

  soft_update(actor_target_.parameters(), actor_.parameters(), cfg_.tau);
  soft_update(critic_target_.parameters(), critic_.parameters(), cfg_.tau);
  return {critic_loss.item(), actor_loss.item()};
}

void DdpgAgent::save(const std::filesystem::path& dir) const {
  save_tensors(dir / "actor.ckpt", actor_.named_parameters("actor"));
  save_tensors(dir / "actor_target.ckpt", actor_target_.named_parameters("actor_target"));
  save_tensors(dir / "critic.ckpt", critic_.named_parameters("critic"));
  save_tensors(dir / "critic_target.ckpt", critic_target_.named_parameters("critic_target"));
}

void DdpgAgent::load(const std::filesystem::path& dir) {
  restore_all(actor_.named_parameters("actor"), load_tensors(dir / "actor.ckpt"));
  restore_all(actor_target_.named_parameters("actor_target"),
              load_tensors(dir / "actor_target.ckpt"));
  restore_all(critic_.named_parameters("critic"), load_tensors(dir / "critic.ckpt"));
  restore_all(critic_target_.named_parameters("critic_target"),
              load_tensors(dir / "critic_target.ckpt"));
}

}  // namespace allocrl
