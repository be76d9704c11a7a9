#include <algorithm>
#include <utility>

#include "allocrl/agents.hpp"

namespace allocrl {

namespace {

std::vector<Tensor> joined(std::vector<Tensor> a, const std::vector<Tensor>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

}  // namespace

SacAgent::SacAgent(int state_dim, int action_dim, SacConfig cfg, std::uint64_t seed)
    : state_dim_(state_dim),
      action_dim_(action_dim),
      cfg_(cfg),
      rng_(mix_seed(seed, "sac")),
      actor_({{state_dim, cfg.hidden, cfg.hidden, 2 * action_dim}, Activation::Relu}, rng_),
      q1_({{state_dim + action_dim, cfg.hidden, cfg.hidden, 1}, Activation::Relu}, rng_),
      q2_(q1_.spec(), rng_),
      q1_target_(q1_.spec(), rng_),
      q2_target_(q1_.spec(), rng_),
      actor_opt_(actor_.parameters(), {cfg.policy_lr}),
      critic_opt_(joined(q1_.parameters(), q2_.parameters()), {cfg.soft_q_lr}),
      buffer_(static_cast<std::size_t>(cfg.buffer_size)) {
  hard_update(q1_target_.parameters(), q1_.parameters());
  hard_update(q2_target_.parameters(), q2_.parameters());
}

Eigen::VectorXd SacAgent::act(const Observation& obs, bool explore) {
  if (explore && steps_ < cfg_.warmup_steps) {
    Eigen::VectorXd a(action_dim_);
    for (int i = 0; i < action_dim_; ++i) a[i] = rng_.uniform(-1.0, 1.0);
    return a;
  }
  const std::vector<double> s = flatten_observation(obs);
  if (!explore) return to_vector(actor_.mean_values(s));
  return to_vector(actor_.sample(s, rng_).sample);
}

void SacAgent::observe(const Transition& t) {
  buffer_.push(t);
  ++steps_;
  const std::size_t threshold =
      std::max<std::size_t>(cfg_.batch_size, static_cast<std::size_t>(cfg_.warmup_steps));
  if (buffer_.size() < threshold) return;
  update_from_batch(buffer_.sample(cfg_.batch_size, rng_));
}

std::vector<double> SacAgent::compute_targets(
    const std::vector<const Transition*>& batch) const {
  std::vector<double> y(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const Transition& t = *batch[i];
    y[i] = t.reward;
    if (t.done) continue;
    const GaussianSample next = actor_.sample(t.next_state, rng_);
    std::vector<double> sa = t.next_state;
    sa.insert(sa.end(), next.sample.begin(), next.sample.end());
    const double q = std::min(q1_target_.forward_values(sa)[0],
                              q2_target_.forward_values(sa)[0]);
    y[i] += cfg_.gamma * (q - cfg_.alpha * next.log_prob);
  }
  return y;
}

std::pair<double, double> SacAgent::update_from_batch(
    const std::vector<const Transition*>& batch) {
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
  Tensor y = column(compute_targets(batch));

  Tensor sa = concat_cols(s, a);
  Tensor critic_loss = add(mean(square(sub(q1_.forward(sa), y))),
                           mean(square(sub(q2_.forward(sa), y))));
  critic_opt_.zero_grad();
  critic_loss.backward();
  critic_opt_.step();

  // Reparametrized draw: a = mean + exp(log_std) * eps keeps the graph alive
  // through both the sample and its log density.
  auto [mu, log_std] = actor_.forward(s);
  std::vector<double> eps(static_cast<std::size_t>(b) * action_dim_);
  for (double& e : eps) e = rng_.gaussian();
  Tensor a_pi = add(mu, mul(exp(log_std), Tensor(b, action_dim_, std::move(eps))));
  Tensor logp = gaussian_log_prob(mu, log_std, a_pi);
  Tensor q_pi = min_elem(q1_.forward(concat_cols(s, a_pi)),
                         q2_.forward(concat_cols(s, a_pi)));
  Tensor actor_loss = mean(sub(scale(logp, cfg_.alpha), q_pi));
  actor_opt_.zero_grad();
  critic_opt_.zero_grad();  // the actor objective also reaches critic params
  actor_loss.backward();
  actor_opt_.step();

  soft_update(q1_target_.parameters(), q1_.parameters(), cfg_.soft_tau);
  soft_update(q2_target_.parameters(), q2_.parameters(), cfg_.soft_tau);
  return {critic_loss.item(), actor_loss.item()};
}

void SacAgent::save(const std::filesystem::path& dir) const {
  save_tensors(dir / "actor.ckpt", actor_.named_parameters("actor"));
  save_tensors(dir / "q1.ckpt", q1_.named_parameters("q1"));
  save_tensors(dir / "q2.ckpt", q2_.named_parameters("q2"));
  save_tensors(dir / "q1_target.ckpt", q1_target_.named_parameters("q1_target"));
  save_tensors(dir / "q2_target.ckpt", q2_target_.named_parameters("q2_target"));
}

void SacAgent::load(const std::filesystem::path& dir) {
  restore_all(actor_.named_parameters("actor"), load_tensors(dir / "actor.ckpt"));
  restore_all(q1_.named_parameters("q1"), load_tensors(dir / "q1.ckpt"));
  restore_all(q2_.named_parameters("q2"), load_tensors(dir / "q2.ckpt"));
  restore_all(q1_target_.named_parameters("q1_target"), load_tensors(dir / "q1_target.ckpt"));
  restore_all(q2_target_.named_parameters("q2_target"), load_tensors(dir / "q2_target.ckpt"));
}

}  // namespace allocrl
