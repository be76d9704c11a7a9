#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "allocrl/baselines.hpp"
#include "allocrl/env.hpp"
#include "allocrl/nn.hpp"
#include "allocrl/replay.hpp"
#include "allocrl/rng.hpp"

namespace allocrl {

std::vector<double> flatten_observation(const Observation& obs);

inline Eigen::VectorXd to_vector(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

// Policy driven by the training/evaluation loops. RL agents emit raw score
// vectors (the env applies the softmax projection); classical baselines emit
// simplex points directly and report emits_simplex() == true.
class Agent {
 public:
  virtual ~Agent() = default;
  virtual std::string name() const = 0;
  virtual int action_dim() const = 0;
  virtual bool emits_simplex() const { return false; }
  virtual bool trainable() const { return true; }
  virtual void begin_episode(const Observation&) {}
  virtual Eigen::VectorXd act(const Observation& obs, bool explore) = 0;
  virtual void observe(const Transition&) {}
  virtual void end_episode() {}
  virtual void save(const std::filesystem::path&) const {}
  virtual void load(const std::filesystem::path&) {}
};

// --- classical baselines ---------------------------------------------------

class UniformAgent final : public Agent {
 public:
  explicit UniformAgent(int dim) : dim_(dim) {}
  std::string name() const override { return "uniform"; }
  int action_dim() const override { return dim_; }
  bool emits_simplex() const override { return true; }
  bool trainable() const override { return false; }
  Eigen::VectorXd act(const Observation&, bool) override { return uniform_weights(dim_); }

 private:
  int dim_;
};

class RandomAgent final : public Agent {
 public:
  RandomAgent(int dim, std::uint64_t seed) : dim_(dim), rng_(mix_seed(seed, "random-agent")) {}
  std::string name() const override { return "random"; }
  int action_dim() const override { return dim_; }
  bool emits_simplex() const override { return true; }
  bool trainable() const override { return false; }
  Eigen::VectorXd act(const Observation&, bool) override { return random_weights(dim_, rng_); }

 private:
  int dim_;
  Rng rng_;
};

// Momentum tilt frozen at episode start: softmax over the initial window's
// column means, held for the whole episode.
class BuyAndHoldAgent final : public Agent {
 public:
  BuyAndHoldAgent(int dim, bool cash_last) : dim_(dim), cash_last_(cash_last) {}
  std::string name() const override { return "buy_and_hold"; }
  int action_dim() const override { return dim_; }
  bool emits_simplex() const override { return true; }
  bool trainable() const override { return false; }
  void begin_episode(const Observation& obs) override;
  Eigen::VectorXd act(const Observation&, bool) override { return frozen_; }

 private:
  int dim_;
  bool cash_last_;
  Eigen::VectorXd frozen_;
};

// Max-Sharpe frontier portfolio recomputed from the rolling window each step.
class MarkowitzAgent final : public Agent {
 public:
  MarkowitzAgent(int dim, bool cash_last, MarkowitzPolicyConfig cfg = {})
      : dim_(dim), cash_last_(cash_last), cfg_(cfg) {}
  std::string name() const override { return "markowitz"; }
  int action_dim() const override { return dim_; }
  bool emits_simplex() const override { return true; }
  bool trainable() const override { return false; }
  Eigen::VectorXd act(const Observation& obs, bool) override;

 private:
  int dim_;
  bool cash_last_;
  MarkowitzPolicyConfig cfg_;
};

// When the env retains cash the baselines see the window extended by a zero
// log-return column, so every rule prices the cash leg through one code path.
Eigen::MatrixXd extend_window_with_cash(const Eigen::MatrixXd& window, bool cash_last);

// --- shared loss builders (also exercised by the gradient-check tests) ------

// Stacks equally sized rows into a constant [B x D] tensor.
Tensor stack_rows(const std::vector<std::vector<double>>& rows);
// Constant [B x 1] tensor.
Tensor column(const std::vector<double>& v);

// -(1/num_episodes) * sum_t G_t * log pi(a_t|s_t)
Tensor reinforce_loss(const GaussianPolicy& policy, const Tensor& states,
                      const Tensor& actions, const std::vector<double>& returns_to_go,
                      int num_episodes);

// -mean(logpi * td_error) - entropy_beta * entropy
Tensor a2c_actor_loss(const GaussianPolicy& policy, const Tensor& states,
                      const Tensor& actions, const std::vector<double>& td_errors,
                      double entropy_beta);

// mean(exp(logpi - old_logpi) * advantage)  (ascended by TRPO)
Tensor trpo_surrogate(const GaussianPolicy& policy, const Tensor& states,
                      const Tensor& actions, const std::vector<double>& old_log_probs,
                      const std::vector<double>& advantages);

// -mean(min(ratio*adv, clip(ratio, 1-eps, 1+eps)*adv))  (descended by PPO)
Tensor ppo_clip_loss(const GaussianPolicy& policy, const Tensor& states,
                     const Tensor& actions, const std::vector<double>& old_log_probs,
                     const std::vector<double>& advantages, double clip_eps);

// --- agent configs (field names follow the experiment configuration) --------

struct NafConfig {
  int layer_size = 256;
  int batch_size = 128;
  int buffer_size = 10000;
  double learning_rate = 1e-3;
  double tau = 1e-3;
  double gamma = 0.99;
  int update_every = 2;
  int number_of_updates = 1;
  int warmup_steps = 100;
  double ou_theta = 0.15;
  double ou_sigma = 0.2;
};

struct ReinforceConfig {
  int hidden = 128;
  double gamma = 0.99;
  double learning_rate = 1e-3;  // unlisted upstream; engine default
  int episodes_per_update = 1;
};

struct DdpgConfig {
  int hidden = 256;
  int memory_size = 10000;
  int num_memory_fill_episodes = 10;  // recorded; warmup_steps gates learning
  double gamma = 0.99;
  double tau = 0.005;
  double sigma = 0.2;  // OU noise
  double theta = 0.15;
  double actor_lr = 1e-4;
  double critic_lr = 1e-3;
  int batch_size = 64;
  int warmup_steps = 100;
};

struct Td3Config {
  int hidden = 256;
  int memory_size = 100000;
  double max_action = 1.0;
  double discount = 0.99;
  int update_freq = 2;
  double tau = 0.005;
  double policy_noise_std = 0.2;
  double policy_noise_clip = 0.5;
  double actor_lr = 1e-3;
  double critic_lr = 1e-3;
  int batch_size = 128;
  double exploration_noise = 0.1;
  bool add_lstm = false;  // recorded; the engine has no recurrent trunk
  int warmup_steps = 100;
};

struct A2cConfig {
  int hidden = 256;
  double entropy_beta = 0.0;
  double gamma = 0.9;
  double actor_lr = 4e-4;
  double critic_lr = 4e-3;
  double max_grad_norm = 0.5;
  int rollout_steps = 1;  // 1 = per-step updates
};

struct SacConfig {
  int hidden = 256;
  double value_lr = 3e-4;   // recorded; this variant has no separate V net
  double soft_q_lr = 3e-4;
  double policy_lr = 3e-4;
  double gamma = 0.99;
  double mean_lambda = 1e-3;  // recorded, unused (policy loss per the update rule)
  double std_lambda = 1e-3;   // recorded, unused
  double z_lambda = 0.0;      // recorded, unused
  double soft_tau = 1e-2;
  int buffer_size = 1000000;
  int batch_size = 128;
  double alpha = 0.2;  // entropy weight, fixed
  int warmup_steps = 100;
};

struct TrpoConfig {
  int hidden = 256;
  double damping = 0.1;
  int episode_length = 2000;  // rollout batch size in steps
  double fisher_ratio = 1.0;  // recorded, unused
  double gamma = 0.995;
  double l2_reg = 0.001;
  double lambda = 0.97;
  double learning_rate = 0.001;  // value-net fit
  int max_iteration_number = 200;  // recorded; training length is driven by timesteps
  double max_kl = 0.01;
  int val_opt_iter = 200;
  int value_memory = 1;  // recorded, unused
  int cg_iterations = 10;
  double backtrack_coeff = 0.5;
  int max_backtracks = 10;
};

struct PpoConfig {
  int hidden = 256;
  int timesteps_per_batch = 50000;
  int max_timesteps_per_episode = 2000;
  int n_updates = 5;
  double learning_rate = 0.005;
  double gamma = 0.95;
  double clip = 0.2;
  double gae_lambda = 0.97;
};

// --- deep agents -------------------------------------------------------------

// Q(s,a) = V(s) - 0.5 (a - mu(s))' L L' (a - mu(s)) with one net emitting
// [V | mu | L entries]; greedy action is mu(s).
class NafAgent final : public Agent {
 public:
  NafAgent(int state_dim, int action_dim, NafConfig cfg, std::uint64_t seed);
  std::string name() const override { return "naf"; }
  int action_dim() const override { return action_dim_; }
  void begin_episode(const Observation&) override { noise_.reset(); }
  Eigen::VectorXd act(const Observation& obs, bool explore) override;
  void observe(const Transition& t) override;
  void save(const std::filesystem::path& dir) const override;
  void load(const std::filesystem::path& dir) override;

  std::vector<double> compute_targets(const std::vector<const Transition*>& batch) const;
  double update_from_batch(const std::vector<const Transition*>& batch);  // critic loss

 private:
  std::vector<double> value_mu_l(const Mlp& net, const std::vector<double>& state) const;

  int state_dim_, action_dim_;
  NafConfig cfg_;
  Rng rng_;
  Mlp net_, target_;
  Adam opt_;
  ReplayBuffer buffer_;
  OuNoise noise_;
  long steps_ = 0;
};

class ReinforceAgent final : public Agent {
 public:
  ReinforceAgent(int state_dim, int action_dim, ReinforceConfig cfg, std::uint64_t seed);
  std::string name() const override { return "reinforce"; }
  int action_dim() const override { return action_dim_; }
  Eigen::VectorXd act(const Observation& obs, bool explore) override;
  void observe(const Transition& t) override;
  void end_episode() override;
  void save(const std::filesystem::path& dir) const override;
  void load(const std::filesystem::path& dir) override;
  double last_loss() const { return last_loss_; }

 private:
  void update();

  int state_dim_, action_dim_;
  ReinforceConfig cfg_;
  Rng rng_;
  GaussianPolicy policy_;
  Adam opt_;
  struct Episode {
    std::vector<double> states, actions, rewards;
    int steps = 0;
  };
  Episode current_;
  std::vector<Episode> pending_;
  double last_loss_ = 0;
};

class DdpgAgent final : public Agent {
 public:
  DdpgAgent(int state_dim, int action_dim, DdpgConfig cfg, std::uint64_t seed);
  std::string name() const override { return "ddpg"; }
  int action_dim() const override { return action_dim_; }
  void begin_episode(const Observation&) override { noise_.reset(); }
  Eigen::VectorXd act(const Observation& obs, bool explore) override;
  void observe(const Transition& t) override;
  void save(const std::filesystem::path& dir) const override;
  void load(const std::filesystem::path& dir) override;

  std::vector<double> compute_targets(const std::vector<const Transition*>& batch) const;
  std::pair<double, double> update_from_batch(const std::vector<const Transition*>& batch);

 private:
  int state_dim_, action_dim_;
  DdpgConfig cfg_;
  Rng rng_;
  Mlp actor_, actor_target_, critic_, critic_target_;
  Adam actor_opt_, critic_opt_;
  ReplayBuffer buffer_;
  OuNoise noise_;
  long steps_ = 0;
};

class Td3Agent final : public Agent {
 public:
  Td3Agent(int state_dim, int action_dim, Td3Config cfg, std::uint64_t seed);
  std::string name() const override { return "td3"; }
  int action_dim() const override { return action_dim_; }
  Eigen::VectorXd act(const Observation& obs, bool explore) override;
  void observe(const Transition& t) override;
  void save(const std::filesystem::path& dir) const override;
  void load(const std::filesystem::path& dir) override;

  // per-sample target critic values and the blended TD target
  struct TwinTargets {
    std::vector<double> q1, q2, y;
  };
  TwinTargets twin_targets(const std::vector<const Transition*>& batch) const;
  std::pair<double, double> update_from_batch(const std::vector<const Transition*>& batch,
                                              bool update_actor);

 private:
  std::vector<double> actor_action(const Mlp& net, const std::vector<double>& state) const;

  int state_dim_, action_dim_;
  Td3Config cfg_;
  mutable Rng rng_;  // twin_targets draws smoothing noise
  Mlp actor_, actor_target_, q1_, q2_, q1_target_, q2_target_;
  Adam actor_opt_, critic_opt_;
  ReplayBuffer buffer_;
  long steps_ = 0;
};

class A2cAgent final : public Agent {
 public:
  A2cAgent(int state_dim, int action_dim, A2cConfig cfg, std::uint64_t seed);
  std::string name() const override { return "a2c"; }
  int action_dim() const override { return action_dim_; }
  Eigen::VectorXd act(const Observation& obs, bool explore) override;
  void observe(const Transition& t) override;
  void end_episode() override;
  void save(const std::filesystem::path& dir) const override;
  void load(const std::filesystem::path& dir) override;

 private:
  void update();
  double q_value(const std::vector<double>& state, const std::vector<double>& action) const;

  int state_dim_, action_dim_;
  A2cConfig cfg_;
  Rng rng_;
  GaussianPolicy policy_;
  Mlp critic_;  // Q(s, a)
  Adam actor_opt_, critic_opt_;
  std::vector<Transition> rollout_;
};

class SacAgent final : public Agent {
 public:
  SacAgent(int state_dim, int action_dim, SacConfig cfg, std::uint64_t seed);
  std::string name() const override { return "sac"; }
  int action_dim() const override { return action_dim_; }
  Eigen::VectorXd act(const Observation& obs, bool explore) override;
  void observe(const Transition& t) override;
  void save(const std::filesystem::path& dir) const override;
  void load(const std::filesystem::path& dir) override;

  std::vector<double> compute_targets(const std::vector<const Transition*>& batch) const;
  std::pair<double, double> update_from_batch(const std::vector<const Transition*>& batch);

 private:
  int state_dim_, action_dim_;
  SacConfig cfg_;
  mutable Rng rng_;  // compute_targets draws next actions from the policy
  StochasticActor actor_;
  Mlp q1_, q2_, q1_target_, q2_target_;
  Adam actor_opt_, critic_opt_;
  ReplayBuffer buffer_;
  long steps_ = 0;
};

class TrpoAgent final : public Agent {
 public:
  TrpoAgent(int state_dim, int action_dim, TrpoConfig cfg, std::uint64_t seed);
  std::string name() const override { return "trpo"; }
  int action_dim() const override { return action_dim_; }
  Eigen::VectorXd act(const Observation& obs, bool explore) override;
  void observe(const Transition& t) override;
  void end_episode() override;
  void save(const std::filesystem::path& dir) const override;
  void load(const std::filesystem::path& dir) override;

  GaussianPolicy& policy() { return policy_; }
  // Fisher-vector product of the mean KL at the current policy, plus damping.
  std::vector<double> fisher_vector_product(const std::vector<std::vector<double>>& states,
                                            const std::vector<double>& v) const;
  // One trust-region update from an explicit batch. Throws LineSearchFailed
  // (with the policy restored) when no backtracked step is acceptable.
  // Returns the sampled KL of the accepted step.
  double update_from_batch(const std::vector<Transition>& batch);
  double last_accepted_kl() const { return last_kl_; }

 private:
  int state_dim_, action_dim_;
  TrpoConfig cfg_;
  Rng rng_;
  GaussianPolicy policy_;
  Mlp value_;
  Adam value_opt_;
  std::vector<Transition> batch_;
  std::vector<double> logp_buf_;  // log prob of each stored action at sample time
  double last_kl_ = 0;
};

// Conjugate-gradient solve of A x = b for a positive-definite operator.
std::vector<double> conjugate_gradient(
    const std::function<std::vector<double>(const std::vector<double>&)>& apply_A,
    const std::vector<double>& b, int iterations, double tol = 1e-10);

class PpoAgent final : public Agent {
 public:
  PpoAgent(int state_dim, int action_dim, PpoConfig cfg, std::uint64_t seed);
  std::string name() const override { return "ppo"; }
  int action_dim() const override { return action_dim_; }
  Eigen::VectorXd act(const Observation& obs, bool explore) override;
  void observe(const Transition& t) override;
  void end_episode() override;
  void save(const std::filesystem::path& dir) const override;
  void load(const std::filesystem::path& dir) override;

  GaussianPolicy& policy() { return policy_; }

 private:
  void update();

  int state_dim_, action_dim_;
  PpoConfig cfg_;
  Rng rng_;
  GaussianPolicy policy_;
  Mlp value_;
  Adam policy_opt_, value_opt_;
  std::vector<Transition> batch_;
  std::vector<double> logp_buf_;
  int episode_steps_ = 0;
};

// Splits a batch at done flags and runs GAE per segment; value bootstraps come
// from `value` (zero past terminal steps). advantages/returns align with batch.
struct AdvantageEstimate {
  std::vector<double> advantages, returns, values;
};
AdvantageEstimate gae_over_batch(const std::vector<Transition>& batch, const Mlp& value,
                                 double gamma, double lambda);

// (x - mean) / (sample std + 1e-10), in place
void normalize_in_place(std::vector<double>& x);

// --- training / evaluation loops --------------------------------------------

void train_agent(Agent& agent, TradingEnv& env, long timesteps);

struct EvaluationResult {
  std::vector<double> equity;              // starts at the initial investment
  std::vector<double> step_log_returns;    // post-cost, one per step
  Eigen::MatrixXd weights;                 // steps x action_dim simplex points
};
// Deterministic rollout (explore = false) from reset() to episode end.
EvaluationResult evaluate_agent(Agent& agent, TradingEnv& env,
                                std::optional<int> start = std::nullopt);

}  // namespace allocrl
