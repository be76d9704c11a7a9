#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "allocrl/rng.hpp"
#include "allocrl/tensor.hpp"

namespace allocrl {

inline constexpr double kLogStdMin = -20.0;
inline constexpr double kLogStdMax = 2.0;

enum class Activation { Relu, Tanh };

struct MlpSpec {
  std::vector<int> sizes;  // input, hidden..., output
  Activation activation = Activation::Relu;
};

// Fully connected net, row-vector convention: y = act(x W + b) ... x W + b.
// Weights and biases init uniform in +-1/sqrt(fan_in).
class Mlp {
 public:
  Mlp() = default;
  Mlp(MlpSpec spec, Rng& rng);

  const MlpSpec& spec() const { return spec_; }
  int input_dim() const { return spec_.sizes.front(); }
  int output_dim() const { return spec_.sizes.back(); }

  Tensor forward(const Tensor& x) const;  // builds the autodiff graph

  // Graph-free fast path for acting and line searches.
  std::vector<double> forward_values(const std::vector<double>& x) const;

  std::vector<Tensor>& parameters() { return params_; }
  const std::vector<Tensor>& parameters() const { return params_; }
  std::vector<std::pair<std::string, Tensor>> named_parameters(const std::string& prefix) const;

  // Flat parameter block, layout W0,b0,W1,b1,...
  int param_count() const;
  void flatten_params(double* out) const;
  void set_params(const double* flat);

  // Exact directional derivative of the outputs along flat direction v.
  void jvp(const std::vector<double>& x, const double* v, std::vector<double>* y,
           std::vector<double>* dy) const;
  // Accumulates d(cotangent . y(x))/dparams into flat_grad.
  void vjp(const std::vector<double>& x, const std::vector<double>& cotangent,
           double* flat_grad) const;

 private:
  MlpSpec spec_;
  std::vector<Tensor> params_;  // W0, b0, W1, b1, ...
};

// log N(action | mean, exp(log_std)^2) summed over action dims -> [B x 1].
// log_std may be [1 x A] (broadcast) or [B x A]; caller clamps beforehand.
Tensor gaussian_log_prob(const Tensor& mean, const Tensor& log_std, const Tensor& action);

// Closed-form log N(action | mean, exp(log_std)^2) summed over dims.
double gaussian_log_prob_value(const std::vector<double>& mean,
                               const std::vector<double>& log_std,
                               const std::vector<double>& action);

struct GaussianSample {
  std::vector<double> sample;
  double log_prob = 0;
  double entropy = 0;
};
// One draw from a diagonal Gaussian head; log_std clamped to [-20, 2].
GaussianSample gaussian_head(const std::vector<double>& mean,
                             const std::vector<double>& log_std, Rng& rng);

// Policy with a state-independent learnable log-std row (REINFORCE/A2C/TRPO/PPO).
class GaussianPolicy {
 public:
  GaussianPolicy() = default;
  GaussianPolicy(MlpSpec trunk, Rng& rng, double init_log_std = 0.0);

  int action_dim() const { return trunk_.output_dim(); }
  Mlp& trunk() { return trunk_; }
  const Mlp& trunk() const { return trunk_; }
  Tensor& log_std_param() { return log_std_; }

  std::vector<double> mean_values(const std::vector<double>& state) const;
  GaussianSample sample(const std::vector<double>& state, Rng& rng) const;

  Tensor mean_forward(const Tensor& states) const { return trunk_.forward(states); }
  Tensor clamped_log_std() const { return clamp(log_std_, kLogStdMin, kLogStdMax); }
  Tensor log_prob(const Tensor& states, const Tensor& actions) const;  // [B x 1]
  Tensor entropy() const;  // 1x1, state-independent

  std::vector<Tensor> parameters();
  std::vector<std::pair<std::string, Tensor>> named_parameters(const std::string& prefix) const;

  // Flat view across trunk + log_std, for the trust-region machinery.
  int param_count() const { return trunk_.param_count() + static_cast<int>(log_std_.size()); }
  void flatten_params(double* out) const;
  void set_params(const double* flat);

 private:
  Mlp trunk_;
  Tensor log_std_;
};

// Actor whose trunk emits [mean | log_std] per state (state-dependent spread).
class StochasticActor {
 public:
  StochasticActor() = default;
  StochasticActor(MlpSpec trunk_with_double_output, Rng& rng);

  int action_dim() const { return trunk_.output_dim() / 2; }
  Mlp& trunk() { return trunk_; }

  std::vector<double> mean_values(const std::vector<double>& state) const;
  GaussianSample sample(const std::vector<double>& state, Rng& rng) const;

  // mean and clamped log_std as graph tensors
  std::pair<Tensor, Tensor> forward(const Tensor& states) const;

  std::vector<Tensor> parameters() { return trunk_.parameters(); }
  std::vector<std::pair<std::string, Tensor>> named_parameters(const std::string& prefix) const {
    return trunk_.named_parameters(prefix);
  }

 private:
  Mlp trunk_;
};

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Adam with bias correction over a fixed parameter list.
class Adam {
 public:
  Adam() = default;
  Adam(std::vector<Tensor> params, AdamConfig cfg);

  void zero_grad();
  void step();
  void set_lr(double lr) { cfg_.lr = lr; }
  double lr() const { return cfg_.lr; }

 private:
  std::vector<Tensor> params_;
  AdamConfig cfg_;
  std::vector<std::vector<double>> m_, v_;
  long t_ = 0;
};

// target <- tau * source + (1 - tau) * target, values only
void soft_update(std::vector<Tensor>& target, const std::vector<Tensor>& source, double tau);
void hard_update(std::vector<Tensor>& target, const std::vector<Tensor>& source);

// Scales all grads so their global L2 norm is at most max_norm; returns the
// pre-clip norm.
double clip_grad_norm(std::vector<Tensor>& params, double max_norm);

// Versioned text checkpoint of named tensors; exact round trip (hex floats).
void save_tensors(const std::filesystem::path& path,
                  const std::vector<std::pair<std::string, Tensor>>& tensors);
std::map<std::string, Tensor> load_tensors(const std::filesystem::path& path);
// Copies values from `src` map entry `name` into dst; shape must match.
void restore(Tensor dst, const std::map<std::string, Tensor>& src, const std::string& name);
// Restores every named tensor in the list from the map.
void restore_all(const std::vector<std::pair<std::string, Tensor>>& tensors,
                 const std::map<std::string, Tensor>& src);

}  // namespace allocrl
