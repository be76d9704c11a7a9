#include <algorithm>
#include <cmath>
#include <utility>

#include "allocrl/agents.hpp"

namespace allocrl {

namespace {

std::vector<Tensor> joined(std::vector<Tensor> a, const std::vector<Tensor>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

}  // namespace

Td3Agent::Td3Agent(int state_dim, int action_dim, Td3Config cfg, std::uint64_t seed)
    : state_dim_(state_dim),
      action_dim_(action_dim),
      cfg_(cfg),
      rng_(mix_seed(seed, "td3")),
      actor_({{state_dim, cfg.hidden, cfg.hidden, action_dim}, Activation::Relu}, rng_),
      actor_target_(actor_.spec(), rng_),
      q1_({{state_dim + action_dim, cfg.hidden, cfg.hidden, 1}, Activation::Relu}, rng_),
      q2_(q1_.spec(), rng_),
      q1_target_(q1_.spec(), rng_),
      q2_target_(q1_.spec(), rng_),
      actor_opt_(actor_.parameters(), {cfg.actor_lr}),
      critic_opt_(joined(q1_.parameters(), q2_.parameters()), {cfg.critic_lr}),
      buffer_(static_cast<std::size_t>(cfg.memory_size)) {
  hard_update(actor_target_.parameters(), actor_.parameters());
  hard_update(q1_target_.parameters(), q1_.parameters());
  hard_update(q2_target_.parameters(), q2_.parameters());
}

std::vector<double> Td3Agent::actor_action(const Mlp& net,
                                           const std::vector<double>& state) const {
  std::vector<double> a = net.forward_values(state);
  for (double& x : a) x = cfg_.max_action * std::tanh(x);
  return a;
}

Eigen::VectorXd Td3Agent::act(const Observation& obs, bool explore) {
  if (explore && steps_ < cfg_.warmup_steps) {
    Eigen::VectorXd a(action_dim_);
    for (int i = 0; i < action_dim_; ++i)
      a[i] = rng_.uniform(-cfg_.max_action, cfg_.max_action);
    return a;
  }
  Eigen::VectorXd a = to_vector(actor_action(actor_, flatten_observation(obs)));
  if (explore) {
    for (int i = 0; i < action_dim_; ++i) {
      a[i] += rng_.gaussian() * cfg_.exploration_noise * cfg_.max_action;
      a[i] = std::clamp(a[i], -cfg_.max_action, cfg_.max_action);
    }
  }
  return a;
}

void Td3Agent::observe(const Transition& t) {
  buffer_.push(t);
  ++steps_;
  const std::size_t threshold =
      std::max<std::size_t>(cfg_.batch_size, static_cast<std::size_t>(cfg_.warmup_steps));
  if (buffer_.size() < threshold) return;
  update_from_batch(buffer_.sample(cfg_.batch_size, rng_), steps_ % cfg_.update_freq == 0);
}

Td3Agent::TwinTargets Td3Agent::twin_targets(
    const std::vector<const Transition*>& batch) const {
  TwinTargets out;
  out.q1.resize(batch.size());
  out.q2.resize(batch.size());
  out.y.resize(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const Transition& t = *batch[i];
    std::vector<double> a = actor_action(actor_target_, t.next_state);
    for (double& x : a) {
      const double noise =
          std::clamp(rng_.gaussian() * cfg_.policy_noise_std * cfg_.max_action,
                     -cfg_.policy_noise_clip * cfg_.max_action,
                     cfg_.policy_noise_clip * cfg_.max_action);
      x = std::clamp(x + noise, -cfg_.max_action, cfg_.max_action);
    }
    std::vector<double> sa = t.next_state;
    sa.insert(sa.end(), a.begin(), a.end());
    out.q1[i] = q1_target_.forward_values(sa)[0];
    out.q2[i] = q2_target_.forward_values(sa)[0];
    out.y[i] = t.reward;
    if (!t.done) out.y[i] += cfg_.discount * std::min(out.q1[i], out.q2[i]);
  }
  return out;
}

std::pair<double, double> Td3Agent::update_from_batch(
    const std::vector<const Transition*>& batch, bool update_actor) {
  const int b = static_cast<int>(batch.size());
  std::vector<double> sflat, aflat;
  sflat.reserve(static_cast<std::size_t>(b) * state_dim_);
  aflat.reserve(static_cast<std::size_t>(b) * action_dim_);
  for (const Transition* t : batch) {
    sflat.insert(sflat.end(), t->state.begin(), t->state.end());
    aflat.insert(aflat.end(), t->action.begin(), t->action.end());
  }
  Tensor s(b, state_dim_, std::move(sflat));
  Tensor a(b, action_dim_, std::move(aflat));
  Tensor y = column(twin_targets(batch).y);

  Tensor sa = concat_cols(s, a);
  Tensor critic_loss = add(mean(square(sub(q1_.forward(sa), y))),
                           mean(square(sub(q2_.forward(sa), y))));
  critic_opt_.zero_grad();
  critic_loss.backward();
  critic_opt_.step();

  double actor_loss_value = 0;
  if (update_actor) {
    Tensor a_pi = scale(tanh(actor_.forward(s)), cfg_.max_action);
    Tensor actor_loss = neg(mean(q1_.forward(concat_cols(s, a_pi))));
    actor_opt_.zero_grad();
    critic_opt_.zero_grad();  // the actor objective also reaches q1 params
    actor_loss.backward();
    actor_opt_.step();
    actor_loss_value = actor_loss.item();

    soft_update(actor_target_.parameters(), actor_.parameters(), cfg_.tau);
    soft_update(q1_target_.parameters(), q1_.parameters(), cfg_.tau);
    soft_update(q2_target_.parameters(), q2_.parameters(), cfg_.tau);
  }
  return {critic_loss.item(), actor_loss_value};
}

void Td3Agent::save(const std::filesystem::path& dir) const {
  save_tensors(dir / "actor.ckpt", actor_.named_parameters("actor"));
  save_tensors(dir / "actor_target.ckpt", actor_target_.named_parameters("actor_target"));
  save_tensors(dir / "q1.ckpt", q1_.named_parameters("q1"));
  save_tensors(dir / "q2.ckpt", q2_.named_parameters("q2"));
  save_tensors(dir / "q1_target.ckpt", q1_target_.named_parameters("q1_target"));
  save_tensors(dir / "q2_target.ckpt", q2_target_.named_parameters("q2_target"));
}

void Td3Agent::load(const std::filesystem::path& dir) {
  restore_all(actor_.named_parameters("actor"), load_tensors(dir / "actor.ckpt"));
  restore_all(actor_target_.named_parameters("actor_target"),
              load_tensors(dir / "actor_target.ckpt"));
  restore_all(q1_.named_parameters("q1"), load_tensors(dir / "q1.ckpt"));
  restore_all(q2_.named_parameters("q2"), load_tensors(dir / "q2.ckpt"));
  restore_all(q1_target_.named_parameters("q1_target"), load_tensors(dir / "q1_target.ckpt"));
  restore_all(q2_target_.named_parameters("q2_target"), load_tensors(dir / "q2_target.ckpt"));
}

}  // namespace allocrl
