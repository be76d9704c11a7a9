#include "allocrl/tensor.hpp"

#include <cmath>
#include <unordered_set>

#include "allocrl/errors.hpp"

namespace allocrl {

void Tensor::Node::ensure_grad() {
  if (grad.size() != values.size()) grad.assign(values.size(), 0.0);
}

Tensor::Tensor(int rows, int cols, std::vector<double> values, bool requires_grad) {
  if (rows < 0 || cols < 0 || values.size() != static_cast<std::size_t>(rows) * cols)
    throw ShapeMismatch("tensor value count does not match shape");
  node_ = std::make_shared<Node>();
  node_->rows = rows;
  node_->cols = cols;
  node_->values = std::move(values);
  node_->requires_grad = requires_grad;
  if (requires_grad) node_->ensure_grad();
}

Tensor Tensor::zeros(int rows, int cols, bool requires_grad) {
  return Tensor(rows, cols, std::vector<double>(static_cast<std::size_t>(rows) * cols, 0.0),
                requires_grad);
}

Tensor Tensor::constant(int rows, int cols, double value) {
  return Tensor(rows, cols, std::vector<double>(static_cast<std::size_t>(rows) * cols, value));
}

Tensor Tensor::scalar(double value) { return Tensor(1, 1, {value}); }

int Tensor::rows() const { return node_ ? node_->rows : 0; }
int Tensor::cols() const { return node_ ? node_->cols : 0; }
bool Tensor::requires_grad() const { return node_ && node_->requires_grad; }
const std::vector<double>& Tensor::values() const { return node_->values; }
std::vector<double>& Tensor::mutable_values() { return node_->values; }

const std::vector<double>& Tensor::grad() const {
  node_->ensure_grad();
  return node_->grad;
}

double Tensor::item() const {
  if (size() != 1) throw ShapeMismatch("item() needs a 1x1 tensor");
  return node_->values[0];
}

void Tensor::zero_grad() {
  if (node_) node_->grad.assign(node_->values.size(), 0.0);
}

void Tensor::backward() const {
  if (!node_ || node_->rows != 1 || node_->cols != 1)
    throw ShapeMismatch("backward() starts from a 1x1 loss");
  // topological order by DFS
  std::vector<Node*> order;
  std::unordered_set<Node*> seen;
  std::vector<std::pair<Node*, std::size_t>> stack{{node_.get(), 0}};
  seen.insert(node_.get());
  while (!stack.empty()) {
    auto& [n, i] = stack.back();
    if (i < n->parents.size()) {
      Node* p = n->parents[i++].get();
      if (p->requires_grad && seen.insert(p).second) stack.emplace_back(p, 0);
    } else {
      order.push_back(n);
      stack.pop_back();
    }
  }
  for (Node* n : order) n->ensure_grad();
  node_->grad[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it)
    if ((*it)->backprop) (*it)->backprop(**it);
}

Tensor make_op(int rows, int cols, std::vector<double> values, std::vector<Tensor> parents,
               std::function<void(Tensor::Node&)> backprop) {
  auto n = std::make_shared<Tensor::Node>();
  n->rows = rows;
  n->cols = cols;
  n->values = std::move(values);
  for (const auto& p : parents) {
    n->parents.push_back(p.node_);
    n->requires_grad = n->requires_grad || p.node_->requires_grad;
  }
  if (n->requires_grad) n->backprop = std::move(backprop);
  Tensor out;
  out.node_ = std::move(n);
  return out;
}

namespace {

void check_defined(const Tensor& t) {
  if (!t.defined()) throw ShapeMismatch("operation on an undefined tensor");
}

// broadcast support: equal shapes, 1x1 anywhere, or 1xC against RxC
enum class Bcast { None, Scalar, Row };

Bcast bcast_kind(const Tensor& big, const Tensor& small) {
  if (big.rows() == small.rows() && big.cols() == small.cols()) return Bcast::None;
  if (small.rows() == 1 && small.cols() == 1) return Bcast::Scalar;
  if (small.rows() == 1 && small.cols() == big.cols()) return Bcast::Row;
  throw ShapeMismatch("incompatible shapes for elementwise op");
}

std::size_t bcast_index(Bcast k, int cols, std::size_t i) {
  switch (k) {
    case Bcast::None: return i;
    case Bcast::Scalar: return 0;
    default: return i % cols;
  }
}

Tensor binary_op(const Tensor& a, const Tensor& b, double (*f)(double, double),
                 double (*dfa)(double, double), double (*dfb)(double, double)) {
  check_defined(a);
  check_defined(b);
  const bool a_big = static_cast<std::size_t>(a.size()) >= static_cast<std::size_t>(b.size());
  const Tensor& big = a_big ? a : b;
  const Tensor& small = a_big ? b : a;
  const Bcast k = bcast_kind(big, small);
  const int rows = big.rows(), cols = big.cols();
  const auto& av = a.values();
  const auto& bv = b.values();
  std::vector<double> out(big.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const std::size_t ia = a_big ? i : bcast_index(k, cols, i);
    const std::size_t ib = a_big ? bcast_index(k, cols, i) : i;
    out[i] = f(av[ia], bv[ib]);
  }
  auto* an = a.node();
  auto* bn = b.node();
  return make_op(rows, cols, std::move(out), {a, b}, [=](Tensor::Node& n) {
    const auto& g = n.grad;
    if (an->requires_grad) {
      an->ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) {
        const std::size_t ia = a_big ? i : bcast_index(k, cols, i);
        const std::size_t ib = a_big ? bcast_index(k, cols, i) : i;
        an->grad[ia] += g[i] * dfa(an->values[ia], bn->values[ib]);
      }
    }
    if (bn->requires_grad) {
      bn->ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) {
        const std::size_t ia = a_big ? i : bcast_index(k, cols, i);
        const std::size_t ib = a_big ? bcast_index(k, cols, i) : i;
        bn->grad[ib] += g[i] * dfb(an->values[ia], bn->values[ib]);
      }
    }
  });
}

Tensor unary_op(const Tensor& a, double (*f)(double), double (*df)(double, double)) {
  check_defined(a);
  const auto& av = a.values();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(av[i]);
  auto* an = a.node();
  return make_op(a.rows(), a.cols(), std::move(out), {a}, [=](Tensor::Node& n) {
    if (!an->requires_grad) return;
    an->ensure_grad();
    for (std::size_t i = 0; i < n.grad.size(); ++i)
      an->grad[i] += n.grad[i] * df(an->values[i], n.values[i]);
  });
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  return binary_op(
      a, b, [](double x, double y) { return x + y; },
      [](double, double) { return 1.0; }, [](double, double) { return 1.0; });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  return binary_op(
      a, b, [](double x, double y) { return x - y; },
      [](double, double) { return 1.0; }, [](double, double) { return -1.0; });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  return binary_op(
      a, b, [](double x, double y) { return x * y; },
      [](double, double y) { return y; }, [](double x, double) { return x; });
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  check_defined(a);
  check_defined(b);
  const int n = a.rows(), k = a.cols(), m = b.cols();
  if (b.rows() != k) throw ShapeMismatch("matmul inner dimensions disagree");
  const auto& av = a.values();
  const auto& bv = b.values();
  std::vector<double> out(static_cast<std::size_t>(n) * m, 0.0);
  for (int i = 0; i < n; ++i)
    for (int p = 0; p < k; ++p) {
      const double aip = av[static_cast<std::size_t>(i) * k + p];
      const double* brow = &bv[static_cast<std::size_t>(p) * m];
      double* orow = &out[static_cast<std::size_t>(i) * m];
      for (int j = 0; j < m; ++j) orow[j] += aip * brow[j];
    }
  auto* an = a.node();
  auto* bn = b.node();
  return make_op(n, m, std::move(out), {a, b}, [=](Tensor::Node& node) {
    const auto& g = node.grad;
    if (an->requires_grad) {  // dA = G * B^T
      an->ensure_grad();
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < m; ++j) {
          const double gij = g[static_cast<std::size_t>(i) * m + j];
          if (gij == 0) continue;
          const double* brow = &bn->values[0];
          for (int p = 0; p < k; ++p)
            an->grad[static_cast<std::size_t>(i) * k + p] +=
                gij * brow[static_cast<std::size_t>(p) * m + j];
        }
    }
    if (bn->requires_grad) {  // dB = A^T * G
      bn->ensure_grad();
      for (int i = 0; i < n; ++i)
        for (int p = 0; p < k; ++p) {
          const double aip = an->values[static_cast<std::size_t>(i) * k + p];
          if (aip == 0) continue;
          const double* grow = &g[static_cast<std::size_t>(i) * m];
          double* brow = &bn->grad[static_cast<std::size_t>(p) * m];
          for (int j = 0; j < m; ++j) brow[j] += aip * grow[j];
        }
    }
  });
}

Tensor neg(const Tensor& a) {
  return unary_op(a, [](double x) { return -x; }, [](double, double) { return -1.0; });
}

Tensor scale(const Tensor& a, double s) { return mul(a, Tensor::scalar(s)); }

Tensor offset(const Tensor& a, double s) { return add(a, Tensor::scalar(s)); }

Tensor square(const Tensor& a) {
  return unary_op(a, [](double x) { return x * x; },
                  [](double x, double) { return 2.0 * x; });
}

Tensor exp(const Tensor& a) {
  return unary_op(a, [](double x) { return std::exp(x); },
                  [](double, double y) { return y; });
}

Tensor log(const Tensor& a) {
  return unary_op(a, [](double x) { return std::log(x); },
                  [](double x, double) { return 1.0 / x; });
}

Tensor relu(const Tensor& a) {
  return unary_op(a, [](double x) { return x > 0 ? x : 0.0; },
                  [](double x, double) { return x > 0 ? 1.0 : 0.0; });
}

Tensor tanh(const Tensor& a) {
  return unary_op(a, [](double x) { return std::tanh(x); },
                  [](double, double y) { return 1.0 - y * y; });
}

Tensor clamp(const Tensor& a, double lo, double hi) {
  check_defined(a);
  const auto& av = a.values();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = av[i] < lo ? lo : (av[i] > hi ? hi : av[i]);
  auto* an = a.node();
  return make_op(a.rows(), a.cols(), std::move(out), {a}, [=](Tensor::Node& n) {
    if (!an->requires_grad) return;
    an->ensure_grad();
    for (std::size_t i = 0; i < n.grad.size(); ++i)
      if (an->values[i] >= lo && an->values[i] <= hi) an->grad[i] += n.grad[i];
  });
}

Tensor min_elem(const Tensor& a, const Tensor& b) {
  check_defined(a);
  check_defined(b);
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw ShapeMismatch("min_elem needs equal shapes");
  const auto& av = a.values();
  const auto& bv = b.values();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] <= bv[i] ? av[i] : bv[i];
  auto* an = a.node();
  auto* bn = b.node();
  return make_op(a.rows(), a.cols(), std::move(out), {a, b}, [=](Tensor::Node& n) {
    for (std::size_t i = 0; i < n.grad.size(); ++i) {
      const bool pick_a = an->values[i] <= bn->values[i];
      Tensor::Node* dst = pick_a ? an : bn;
      if (!dst->requires_grad) continue;
      dst->ensure_grad();
      dst->grad[i] += n.grad[i];
    }
  });
}

Tensor sum(const Tensor& a) {
  check_defined(a);
  double s = 0;
  for (const double v : a.values()) s += v;
  auto* an = a.node();
  return make_op(1, 1, {s}, {a}, [=](Tensor::Node& n) {
    if (!an->requires_grad) return;
    an->ensure_grad();
    for (auto& g : an->grad) g += n.grad[0];
  });
}

Tensor mean(const Tensor& a) {
  check_defined(a);
  return scale(sum(a), 1.0 / a.size());
}

Tensor sum_cols(const Tensor& a) {
  check_defined(a);
  const int r = a.rows(), c = a.cols();
  const auto& av = a.values();
  std::vector<double> out(r, 0.0);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) out[i] += av[static_cast<std::size_t>(i) * c + j];
  auto* an = a.node();
  return make_op(r, 1, std::move(out), {a}, [=](Tensor::Node& n) {
    if (!an->requires_grad) return;
    an->ensure_grad();
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < c; ++j) an->grad[static_cast<std::size_t>(i) * c + j] += n.grad[i];
  });
}

Tensor slice_cols(const Tensor& a, int begin, int count) {
  check_defined(a);
  const int r = a.rows(), c = a.cols();
  if (begin < 0 || count < 1 || begin + count > c) throw ShapeMismatch("bad column slice");
  const auto& av = a.values();
  std::vector<double> out(static_cast<std::size_t>(r) * count);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < count; ++j)
      out[static_cast<std::size_t>(i) * count + j] =
          av[static_cast<std::size_t>(i) * c + begin + j];
  auto* an = a.node();
  return make_op(r, count, std::move(out), {a}, [=](Tensor::Node& n) {
    if (!an->requires_grad) return;
    an->ensure_grad();
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < count; ++j)
        an->grad[static_cast<std::size_t>(i) * c + begin + j] +=
            n.grad[static_cast<std::size_t>(i) * count + j];
  });
}

Tensor concat_cols(const Tensor& a, const Tensor& b) {
  check_defined(a);
  check_defined(b);
  if (a.rows() != b.rows()) throw ShapeMismatch("concat_cols needs equal row counts");
  const int r = a.rows(), ca = a.cols(), cb = b.cols();
  const auto& av = a.values();
  const auto& bv = b.values();
  std::vector<double> out(static_cast<std::size_t>(r) * (ca + cb));
  for (int i = 0; i < r; ++i) {
    for (int j = 0; j < ca; ++j)
      out[static_cast<std::size_t>(i) * (ca + cb) + j] = av[static_cast<std::size_t>(i) * ca + j];
    for (int j = 0; j < cb; ++j)
      out[static_cast<std::size_t>(i) * (ca + cb) + ca + j] =
          bv[static_cast<std::size_t>(i) * cb + j];
  }
  auto* an = a.node();
  auto* bn = b.node();
  return make_op(r, ca + cb, std::move(out), {a, b}, [=](Tensor::Node& n) {
    if (an->requires_grad) {
      an->ensure_grad();
      for (int i = 0; i < r; ++i)
        for (int j = 0; j < ca; ++j)
          an->grad[static_cast<std::size_t>(i) * ca + j] +=
              n.grad[static_cast<std::size_t>(i) * (ca + cb) + j];
    }
    if (bn->requires_grad) {
      bn->ensure_grad();
      for (int i = 0; i < r; ++i)
        for (int j = 0; j < cb; ++j)
          bn->grad[static_cast<std::size_t>(i) * cb + j] +=
              n.grad[static_cast<std::size_t>(i) * (ca + cb) + ca + j];
    }
  });
}

Tensor softmax_rows(const Tensor& a) {
  check_defined(a);
  const int r = a.rows(), c = a.cols();
  const auto& av = a.values();
  std::vector<double> out(av.size());
  for (int i = 0; i < r; ++i) {
    const double* x = &av[static_cast<std::size_t>(i) * c];
    double* y = &out[static_cast<std::size_t>(i) * c];
    double mx = x[0];
    for (int j = 1; j < c; ++j) mx = std::max(mx, x[j]);
    double s = 0;
    for (int j = 0; j < c; ++j) s += (y[j] = std::exp(x[j] - mx));
    for (int j = 0; j < c; ++j) y[j] /= s;
  }
  auto* an = a.node();
  return make_op(r, c, std::move(out), {a}, [=](Tensor::Node& n) {
    if (!an->requires_grad) return;
    an->ensure_grad();
    for (int i = 0; i < r; ++i) {
      const double* y = &n.values[static_cast<std::size_t>(i) * c];
      const double* g = &n.grad[static_cast<std::size_t>(i) * c];
      double dot = 0;
      for (int j = 0; j < c; ++j) dot += g[j] * y[j];
      double* ga = &an->grad[static_cast<std::size_t>(i) * c];
      for (int j = 0; j < c; ++j) ga[j] += y[j] * (g[j] - dot);
    }
  });
}

Tensor detach(const Tensor& a) {
  check_defined(a);
  return Tensor(a.rows(), a.cols(), a.values());
}

Tensor quadratic_advantage(const Tensor& l_raw, const Tensor& d) {
  check_defined(l_raw);
  check_defined(d);
  const int batch = d.rows(), m = d.cols();
  const int k = m * (m + 1) / 2;
  if (l_raw.rows() != batch || l_raw.cols() != k)
    throw ShapeMismatch("quadratic_advantage: L entries must be [batch x m(m+1)/2]");
  const auto& lv = l_raw.values();
  const auto& dv = d.values();
  std::vector<double> out(batch, 0.0);
  std::vector<double> vbuf(static_cast<std::size_t>(batch) * m);  // v = L^T d per row
  for (int b = 0; b < batch; ++b) {
    const double* lrow = &lv[static_cast<std::size_t>(b) * k];
    const double* drow = &dv[static_cast<std::size_t>(b) * m];
    double* v = &vbuf[static_cast<std::size_t>(b) * m];
    for (int j = 0; j < m; ++j) {
      double acc = 0;
      for (int i = j; i < m; ++i) {
        const double lij = (i == j) ? std::exp(lrow[i * (i + 1) / 2 + j])
                                    : lrow[i * (i + 1) / 2 + j];
        acc += lij * drow[i];
      }
      v[j] = acc;
      out[b] -= 0.5 * acc * acc;
    }
  }
  auto* ln = l_raw.node();
  auto* dn = d.node();
  return make_op(batch, 1, std::move(out), {l_raw, d},
                 [=, vbuf = std::move(vbuf)](Tensor::Node& n) {
    if (ln->requires_grad) ln->ensure_grad();
    if (dn->requires_grad) dn->ensure_grad();
    for (int b = 0; b < batch; ++b) {
      const double gb = n.grad[b];
      if (gb == 0) continue;
      const double* lrow = &ln->values[static_cast<std::size_t>(b) * k];
      const double* drow = &dn->values[static_cast<std::size_t>(b) * m];
      const double* v = &vbuf[static_cast<std::size_t>(b) * m];
      for (int j = 0; j < m; ++j) {
        const double gv = -gb * v[j];  // dA/dv_j = -v_j
        for (int i = j; i < m; ++i) {
          const std::size_t idx = static_cast<std::size_t>(i) * (i + 1) / 2 + j;
          const double lij = (i == j) ? std::exp(lrow[idx]) : lrow[idx];
          if (ln->requires_grad)
            ln->grad[static_cast<std::size_t>(b) * k + idx] +=
                gv * drow[i] * ((i == j) ? lij : 1.0);
          if (dn->requires_grad)
            dn->grad[static_cast<std::size_t>(b) * m + i] += gv * lij;
        }
      }
    }
  });
}

}  // namespace allocrl
