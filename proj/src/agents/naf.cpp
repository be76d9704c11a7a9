#include <algorithm>
#include <utility>

#include "allocrl/agents.hpp"

namespace allocrl {

namespace {
int naf_output_dim(int a) { return 1 + a + a * (a + 1) / 2; }
}  // namespace

NafAgent::NafAgent(int state_dim, int action_dim, NafConfig cfg, std::uint64_t seed)
    : state_dim_(state_dim),
      action_dim_(action_dim),
      cfg_(cfg),
      rng_(mix_seed(seed, "naf")),
      net_({{state_dim, cfg.layer_size, cfg.layer_size, naf_output_dim(action_dim)},
            Activation::Relu},
           rng_),
      target_(net_.spec(), rng_),
      opt_(net_.parameters(), {cfg.learning_rate}),
      buffer_(static_cast<std::size_t>(cfg.buffer_size)),
      noise_(action_dim, cfg.ou_theta, cfg.ou_sigma) {
  hard_update(target_.parameters(), net_.parameters());
}

std::vector<double> NafAgent::value_mu_l(const Mlp& net, const std::vector<double>& state) const {
  return net.forward_values(state);
}

Eigen::VectorXd NafAgent::act(const Observation& obs, bool explore) {
  if (explore && steps_ < cfg_.warmup_steps) {
    Eigen::VectorXd a(action_dim_);
    for (int i = 0; i < action_dim_; ++i) a[i] = rng_.uniform(-1.0, 1.0);
    return a;
  }
  const std::vector<double> s = flatten_observation(obs);
  const std::vector<double> out = value_mu_l(net_, s);
  Eigen::VectorXd mu(action_dim_);
  for (int i = 0; i < action_dim_; ++i) mu[i] = out[1 + i];
  if (explore) {
    const auto& n = noise_.step(rng_);
    for (int i = 0; i < action_dim_; ++i) mu[i] += n[i];
  }
  return mu;
}

void NafAgent::observe(const Transition& t) {
  buffer_.push(t);
  ++steps_;
  const std::size_t threshold =
      std::max<std::size_t>(cfg_.batch_size, static_cast<std::size_t>(cfg_.warmup_steps));
  if (steps_ % cfg_.update_every != 0 || buffer_.size() < threshold) return;
  for (int i = 0; i < cfg_.number_of_updates; ++i)
    update_from_batch(buffer_.sample(cfg_.batch_size, rng_));
}

std::vector<double> NafAgent::compute_targets(
    const std::vector<const Transition*>& batch) const {
  std::vector<double> y(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const Transition& t = *batch[i];
    y[i] = t.reward;
    if (!t.done) y[i] += cfg_.gamma * value_mu_l(target_, t.next_state)[0];
  }
  return y;
}

double NafAgent::update_from_batch(const std::vector<const Transition*>& batch) {
  const int b = static_cast<int>(batch.size());
  std::vector<double> sflat, aflat;
  sflat.reserve(static_cast<std::size_t>(b) * state_dim_);
  aflat.reserve(static_cast<std::size_t>(b) * action_dim_);
  for (const Transition* t : batch) {
    sflat.insert(sflat.end(), t->state.begin(), t->state.end());
    aflat.insert(aflat.end(), t->action.begin(), t->action.end());
  }
  const std::vector<double> targets = compute_targets(batch);

  Tensor s(b, state_dim_, std::move(sflat));
  Tensor a(b, action_dim_, std::move(aflat));
  Tensor out = net_.forward(s);
  Tensor v = slice_cols(out, 0, 1);
  Tensor mu = slice_cols(out, 1, action_dim_);
  Tensor l_raw = slice_cols(out, 1 + action_dim_, action_dim_ * (action_dim_ + 1) / 2);
  Tensor q = add(v, quadratic_advantage(l_raw, sub(a, mu)));
  Tensor loss = mean(square(sub(q, column(targets))));
  opt_.zero_grad();
  loss.backward();
  opt_.step();
  soft_update(target_.parameters(), net_.parameters(), cfg_.tau);
  return loss.item();
}

void NafAgent::save(const std::filesystem::path& dir) const {
  save_tensors(dir / "net.ckpt", net_.named_parameters("net"));
  save_tensors(dir / "target.ckpt", target_.named_parameters("target"));
}

void NafAgent::load(const std::filesystem::path& dir) {
  restore_all(net_.named_parameters("net"), load_tensors(dir / "net.ckpt"));
  restore_all(target_.named_parameters("target"), load_tensors(dir / "target.ckpt"));
}

}  // namespace allocrl
