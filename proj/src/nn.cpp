#include "allocrl/nn.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <numbers>
#include <sstream>

#include "allocrl/errors.hpp"

namespace allocrl {

namespace {
constexpr double kLog2Pi = 1.8378770664093453;  // ln(2*pi)

double activate(Activation a, double x) {
  return a == Activation::Relu ? (x > 0 ? x : 0.0) : std::tanh(x);
}
double activate_deriv(Activation a, double x, double y) {
  return a == Activation::Relu ? (x > 0 ? 1.0 : 0.0) : 1.0 - y * y;
}
}  // namespace

Mlp::Mlp(MlpSpec spec, Rng& rng) : spec_(std::move(spec)) {
  if (spec_.sizes.size() < 2) throw ShapeMismatch("mlp needs at least input and output sizes");
  for (std::size_t l = 0; l + 1 < spec_.sizes.size(); ++l) {
    const int in = spec_.sizes[l], out = spec_.sizes[l + 1];
    if (in < 1 || out < 1) throw ShapeMismatch("mlp layer sizes must be positive");
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    std::vector<double> w(static_cast<std::size_t>(in) * out);
    for (auto& v : w) v = rng.uniform(-bound, bound);
    std::vector<double> b(out);
    for (auto& v : b) v = rng.uniform(-bound, bound);
    params_.emplace_back(in, out, std::move(w), true);
    params_.emplace_back(1, out, std::move(b), true);
  }
}

Tensor Mlp::forward(const Tensor& x) const {
  Tensor h = x;
  const std::size_t layers = params_.size() / 2;
  for (std::size_t l = 0; l < layers; ++l) {
    h = add(matmul(h, params_[2 * l]), params_[2 * l + 1]);
    if (l + 1 < layers)
      h = spec_.activation == Activation::Relu ? relu(h) : allocrl::tanh(h);
  }
  return h;
}

std::vector<double> Mlp::forward_values(const std::vector<double>& x) const {
  if (static_cast<int>(x.size()) != input_dim())
    throw ShapeMismatch("mlp input size mismatch");
  std::vector<double> cur = x, next;
  const std::size_t layers = params_.size() / 2;
  for (std::size_t l = 0; l < layers; ++l) {
    const auto& w = params_[2 * l].values();
    const auto& b = params_[2 * l + 1].values();
    const int in = spec_.sizes[l], out = spec_.sizes[l + 1];
    next.assign(b.begin(), b.end());
    for (int i = 0; i < in; ++i) {
      const double xi = cur[i];
      if (xi == 0) continue;
      const double* wrow = &w[static_cast<std::size_t>(i) * out];
      for (int j = 0; j < out; ++j) next[j] += xi * wrow[j];
    }
    if (l + 1 < layers)
      for (auto& v : next) v = activate(spec_.activation, v);
    cur.swap(next);
  }
  return cur;
}

std::vector<std::pair<std::string, Tensor>> Mlp::named_parameters(
    const std::string& prefix) const {
  std::vector<std::pair<std::string, Tensor>> out;
  for (std::size_t l = 0; l * 2 < params_.size(); ++l) {
    out.emplace_back(prefix + ".w" + std::to_string(l), params_[2 * l]);
    out.emplace_back(prefix + ".b" + std::to_string(l), params_[2 * l + 1]);
  }
  return out;
}

int Mlp::param_count() const {
  int n = 0;
  for (const auto& p : params_) n += p.size();
  return n;
}

void Mlp::flatten_params(double* out) const {
  for (const auto& p : params_) {
    std::memcpy(out, p.values().data(), sizeof(double) * p.values().size());
    out += p.values().size();
  }
}

void Mlp::set_params(const double* flat) {
  for (auto& p : params_) {
    auto& v = const_cast<Tensor&>(p).mutable_values();
    std::memcpy(v.data(), flat, sizeof(double) * v.size());
    flat += v.size();
  }
}

void Mlp::jvp(const std::vector<double>& x, const double* v, std::vector<double>* y,
              std::vector<double>* dy) const {
  std::vector<double> cur = x, dcur(x.size(), 0.0), next, dnext;
  const std::size_t layers = params_.size() / 2;
  std::size_t off = 0;
  for (std::size_t l = 0; l < layers; ++l) {
    const auto& w = params_[2 * l].values();
    const auto& b = params_[2 * l + 1].values();
    const int in = spec_.sizes[l], out = spec_.sizes[l + 1];
    const double* dw = v + off;
    const double* db = v + off + static_cast<std::size_t>(in) * out;
    next.assign(b.begin(), b.end());
    dnext.assign(db, db + out);
    for (int i = 0; i < in; ++i) {
      const double xi = cur[i], dxi = dcur[i];
      const double* wrow = &w[static_cast<std::size_t>(i) * out];
      const double* dwrow = dw + static_cast<std::size_t>(i) * out;
      for (int j = 0; j < out; ++j) {
        next[j] += xi * wrow[j];
        dnext[j] += dxi * wrow[j] + xi * dwrow[j];  // product rule: d(xW) = dx W + x dW
      }
    }
    off += static_cast<std::size_t>(in) * out + out;
    if (l + 1 < layers)
      for (int j = 0; j < out; ++j) {
        const double pre = next[j];
        next[j] = activate(spec_.activation, pre);
        dnext[j] *= activate_deriv(spec_.activation, pre, next[j]);
      }
    cur.swap(next);
    dcur.swap(dnext);
  }
  if (y) *y = cur;
  if (dy) *dy = dcur;
}

void Mlp::vjp(const std::vector<double>& x, const std::vector<double>& cotangent,
              double* flat_grad) const {
  const std::size_t layers = params_.size() / 2;
  // forward, caching layer inputs and pre-activations
  std::vector<std::vector<double>> inputs(layers), pre(layers);
  std::vector<double> cur = x;
  for (std::size_t l = 0; l < layers; ++l) {
    inputs[l] = cur;
    const auto& w = params_[2 * l].values();
    const auto& b = params_[2 * l + 1].values();
    const int in = spec_.sizes[l], out = spec_.sizes[l + 1];
    std::vector<double> z(b.begin(), b.end());
    for (int i = 0; i < in; ++i) {
      const double xi = cur[i];
      const double* wrow = &w[static_cast<std::size_t>(i) * out];
      for (int j = 0; j < out; ++j) z[j] += xi * wrow[j];
    }
    pre[l] = z;
    if (l + 1 < layers)
      for (auto& t : z) t = activate(spec_.activation, t);
    cur = std::move(z);
  }
  // backward
  std::vector<double> g = cotangent;
  std::vector<std::size_t> offsets(layers);
  std::size_t off = 0;
  for (std::size_t l = 0; l < layers; ++l) {
    offsets[l] = off;
    off += static_cast<std::size_t>(spec_.sizes[l]) * spec_.sizes[l + 1] + spec_.sizes[l + 1];
  }
  for (std::size_t l = layers; l-- > 0;) {
    const int in = spec_.sizes[l], out = spec_.sizes[l + 1];
    if (l + 1 < layers)
      for (int j = 0; j < out; ++j) {
        const double y = activate(spec_.activation, pre[l][j]);
        g[j] *= activate_deriv(spec_.activation, pre[l][j], y);
      }
    double* gw = flat_grad + offsets[l];
    double* gb = gw + static_cast<std::size_t>(in) * out;
    for (int j = 0; j < out; ++j) gb[j] += g[j];
    const auto& w = params_[2 * l].values();
    std::vector<double> gin(in, 0.0);
    for (int i = 0; i < in; ++i) {
      const double xi = inputs[l][i];
      const double* wrow = &w[static_cast<std::size_t>(i) * out];
      double* gwrow = gw + static_cast<std::size_t>(i) * out;
      double acc = 0;
      for (int j = 0; j < out; ++j) {
        gwrow[j] += xi * g[j];
        acc += wrow[j] * g[j];
      }
      gin[i] = acc;
    }
    g = std::move(gin);
  }
}

Tensor gaussian_log_prob(const Tensor& mean, const Tensor& log_std, const Tensor& action) {
  const int a_dim = mean.cols();
  const Tensor inv_std = exp(neg(log_std));
  const Tensor zn = mul(sub(action, mean), inv_std);
  const Tensor per_dim = sub(scale(square(zn), -0.5), log_std);  // -0.5 z^2 - log sigma
  return offset(sum_cols(per_dim), -0.5 * a_dim * kLog2Pi);
}

double gaussian_log_prob_value(const std::vector<double>& mean,
                               const std::vector<double>& log_std,
                               const std::vector<double>& action) {
  if (mean.size() != log_std.size() || mean.size() != action.size())
    throw ShapeMismatch("gaussian log prob dim mismatch");
  double lp = 0;
  for (std::size_t i = 0; i < mean.size(); ++i) {
    const double z = (action[i] - mean[i]) * std::exp(-log_std[i]);
    lp += -0.5 * kLog2Pi - log_std[i] - 0.5 * z * z;
  }
  return lp;
}

GaussianSample gaussian_head(const std::vector<double>& mean,
                             const std::vector<double>& log_std, Rng& rng) {
  if (mean.size() != log_std.size()) throw ShapeMismatch("gaussian head dim mismatch");
  GaussianSample out;
  out.sample.resize(mean.size());
  for (std::size_t i = 0; i < mean.size(); ++i) {
    const double ls = std::clamp(log_std[i], kLogStdMin, kLogStdMax);
    const double sigma = std::exp(ls);
    const double z = rng.gaussian();
    out.sample[i] = mean[i] + sigma * z;
    out.log_prob += -0.5 * kLog2Pi - ls - 0.5 * z * z;
    out.entropy += 0.5 * (kLog2Pi + 1.0) + ls;
  }
  return out;
}

GaussianPolicy::GaussianPolicy(MlpSpec trunk, Rng& rng, double init_log_std)
    : trunk_(std::move(trunk), rng),
      log_std_(1, trunk_.output_dim(),
               std::vector<double>(trunk_.output_dim(), init_log_std), true) {}

std::vector<double> GaussianPolicy::mean_values(const std::vector<double>& state) const {
  return trunk_.forward_values(state);
}

GaussianSample GaussianPolicy::sample(const std::vector<double>& state, Rng& rng) const {
  return gaussian_head(trunk_.forward_values(state), log_std_.values(), rng);
}

Tensor GaussianPolicy::log_prob(const Tensor& states, const Tensor& actions) const {
  return gaussian_log_prob(mean_forward(states), clamped_log_std(), actions);
}

Tensor GaussianPolicy::entropy() const {
  const int a = action_dim();
  return offset(sum(clamped_log_std()), 0.5 * a * (kLog2Pi + 1.0));
}

std::vector<Tensor> GaussianPolicy::parameters() {
  std::vector<Tensor> out = trunk_.parameters();
  out.push_back(log_std_);
  return out;
}

std::vector<std::pair<std::string, Tensor>> GaussianPolicy::named_parameters(
    const std::string& prefix) const {
  auto out = trunk_.named_parameters(prefix);
  out.emplace_back(prefix + ".log_std", log_std_);
  return out;
}

void GaussianPolicy::flatten_params(double* out) const {
  trunk_.flatten_params(out);
  std::memcpy(out + trunk_.param_count(), log_std_.values().data(),
              sizeof(double) * log_std_.values().size());
}

void GaussianPolicy::set_params(const double* flat) {
  trunk_.set_params(flat);
  auto& v = log_std_.mutable_values();
  std::memcpy(v.data(), flat + trunk_.param_count(), sizeof(double) * v.size());
}

StochasticActor::StochasticActor(MlpSpec trunk_with_double_output, Rng& rng)
    : trunk_(std::move(trunk_with_double_output), rng) {
  if (trunk_.output_dim() % 2 != 0)
    throw ShapeMismatch("stochastic actor trunk must emit [mean | log_std]");
}

std::vector<double> StochasticActor::mean_values(const std::vector<double>& state) const {
  auto out = trunk_.forward_values(state);
  out.resize(out.size() / 2);
  return out;
}

GaussianSample StochasticActor::sample(const std::vector<double>& state, Rng& rng) const {
  auto out = trunk_.forward_values(state);
  const std::size_t a = out.size() / 2;
  std::vector<double> mean(out.begin(), out.begin() + a);
  std::vector<double> log_std(out.begin() + a, out.end());
  return gaussian_head(mean, log_std, rng);
}

std::pair<Tensor, Tensor> StochasticActor::forward(const Tensor& states) const {
  const Tensor both = trunk_.forward(states);
  const int a = action_dim();
  return {slice_cols(both, 0, a), clamp(slice_cols(both, a, a), kLogStdMin, kLogStdMax)};
}

Adam::Adam(std::vector<Tensor> params, AdamConfig cfg) : params_(std::move(params)), cfg_(cfg) {
  m_.resize(params_.size());
  v_.resize(params_.size());
  for (std::size_t i = 0; i < params_.size(); ++i) {
    m_[i].assign(params_[i].size(), 0.0);
    v_[i].assign(params_[i].size(), 0.0);
  }
}

void Adam::zero_grad() {
  for (auto& p : params_) p.zero_grad();
}

void Adam::step() {
  ++t_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, t_);
  const double bc2 = 1.0 - std::pow(cfg_.beta2, t_);
  for (std::size_t i = 0; i < params_.size(); ++i) {
    const auto& g = params_[i].grad();
    auto& vals = params_[i].mutable_values();
    for (std::size_t j = 0; j < vals.size(); ++j) {
      m_[i][j] = cfg_.beta1 * m_[i][j] + (1.0 - cfg_.beta1) * g[j];
      v_[i][j] = cfg_.beta2 * v_[i][j] + (1.0 - cfg_.beta2) * g[j] * g[j];
      const double mhat = m_[i][j] / bc1;
      const double vhat = v_[i][j] / bc2;
      vals[j] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
    }
  }
}

void soft_update(std::vector<Tensor>& target, const std::vector<Tensor>& source, double tau) {
  if (target.size() != source.size()) throw ShapeMismatch("soft_update parameter list mismatch");
  for (std::size_t i = 0; i < target.size(); ++i) {
    auto& t = target[i].mutable_values();
    const auto& s = source[i].values();
    if (t.size() != s.size()) throw ShapeMismatch("soft_update tensor size mismatch");
    for (std::size_t j = 0; j < t.size(); ++j) t[j] = tau * s[j] + (1.0 - tau) * t[j];
  }
}

void hard_update(std::vector<Tensor>& target, const std::vector<Tensor>& source) {
  soft_update(target, source, 1.0);
}

double clip_grad_norm(std::vector<Tensor>& params, double max_norm) {
  double sq = 0;
  for (auto& p : params)
    for (const double g : p.grad()) sq += g * g;
  const double norm = std::sqrt(sq);
  if (norm > max_norm && norm > 0) {
    const double s = max_norm / norm;
    for (auto& p : params) {
      auto& g = const_cast<std::vector<double>&>(p.grad());
      for (auto& x : g) x *= s;
    }
  }
  return norm;
}

void save_tensors(const std::filesystem::path& path,
                  const std::vector<std::pair<std::string, Tensor>>& tensors) {
  if (!path.parent_path().empty()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CheckpointError("cannot write '" + path.string() + "'");
  out << "allocrl-checkpoint 1\n" << tensors.size() << '\n';
  char buf[40];
  for (const auto& [name, t] : tensors) {
    if (name.find_first_of(" \n") != std::string::npos)
      throw CheckpointError("tensor name may not contain spaces: '" + name + "'");
    out << name << ' ' << t.rows() << ' ' << t.cols();
    for (const double v : t.values()) {
      std::snprintf(buf, sizeof buf, " %a", v);  // hex float: exact round trip
      out << buf;
    }
    out << '\n';
  }
}

std::map<std::string, Tensor> load_tensors(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open '" + path.string() + "'");
  std::string magic;
  int version = 0;
  in >> magic >> version;
  if (magic != "allocrl-checkpoint" || version != 1)
    throw CheckpointError("'" + path.string() + "' is not a version-1 checkpoint");
  std::size_t count = 0;
  in >> count;
  std::map<std::string, Tensor> out;
  for (std::size_t i = 0; i < count; ++i) {
    std::string name;
    int r = 0, c = 0;
    if (!(in >> name >> r >> c) || r < 0 || c < 0)
      throw CheckpointError("truncated checkpoint '" + path.string() + "'");
    std::vector<double> vals(static_cast<std::size_t>(r) * c);
    for (auto& v : vals) {
      std::string tok;
      if (!(in >> tok)) throw CheckpointError("truncated checkpoint '" + path.string() + "'");
      v = std::strtod(tok.c_str(), nullptr);
    }
    out.emplace(name, Tensor(r, c, std::move(vals)));
  }
  return out;
}

void restore(Tensor dst, const std::map<std::string, Tensor>& src, const std::string& name) {
  const auto it = src.find(name);
  if (it == src.end()) throw CheckpointError("checkpoint is missing tensor '" + name + "'");
  if (it->second.rows() != dst.rows() || it->second.cols() != dst.cols())
    throw CheckpointError("checkpoint tensor '" + name + "' has the wrong shape");
  dst.mutable_values() = it->second.values();
}

void restore_all(const std::vector<std::pair<std::string, Tensor>>& tensors,
                 const std::map<std::string, Tensor>& src) {
  for (const auto& [name, t] : tensors) restore(t, src, name);
}

}  // namespace allocrl
