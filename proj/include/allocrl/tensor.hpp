#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <vector>

namespace allocrl {

// Dense 2-D tensor with reverse-mode differentiation. Graphs are rebuilt per
// forward pass (define-by-run); a Tensor is a cheap shared handle to a node.
// Parameters are leaf tensors with requires_grad; their grad buffers persist
// and accumulate until zero_grad().
class Tensor {
 public:
  Tensor() = default;
  Tensor(int rows, int cols, std::vector<double> values, bool requires_grad = false);

  static Tensor zeros(int rows, int cols, bool requires_grad = false);
  static Tensor constant(int rows, int cols, double value);
  static Tensor scalar(double value);

  bool defined() const { return node_ != nullptr; }
  int rows() const;
  int cols() const;
  int size() const { return rows() * cols(); }
  bool requires_grad() const;

  const std::vector<double>& values() const;
  std::vector<double>& mutable_values();  // in-place update, bypasses the graph
  const std::vector<double>& grad() const;
  double item() const;  // value of a 1x1 tensor

  void zero_grad();
  // Reverse sweep from a 1x1 output; accumulates into leaf grads.
  void backward() const;

  struct Node;
  Node* node() const { return node_.get(); }

 private:
  explicit Tensor(std::shared_ptr<Node> n) : node_(std::move(n)) {}
  std::shared_ptr<Node> node_;

  friend Tensor make_op(int, int, std::vector<double>, std::vector<Tensor>,
                        std::function<void(Node&)>);
};

struct Tensor::Node {
  int rows = 0, cols = 0;
  std::vector<double> values;
  std::vector<double> grad;
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backprop;  // reads this->grad, accumulates into parents
  void ensure_grad();
};

// --- elementwise / structural ops -----------------------------------------
// Binary ops broadcast a 1x1 operand anywhere and a 1xC row vector against RxC.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor matmul(const Tensor& a, const Tensor& b);

Tensor neg(const Tensor& a);
Tensor scale(const Tensor& a, double s);
Tensor offset(const Tensor& a, double s);
Tensor square(const Tensor& a);
Tensor exp(const Tensor& a);
Tensor log(const Tensor& a);
Tensor relu(const Tensor& a);
Tensor tanh(const Tensor& a);
// zero gradient outside [lo, hi]; pass-through inside (inclusive)
Tensor clamp(const Tensor& a, double lo, double hi);
// elementwise minimum; gradient follows the selected operand (a on ties)
Tensor min_elem(const Tensor& a, const Tensor& b);

Tensor sum(const Tensor& a);       // 1x1
Tensor mean(const Tensor& a);      // 1x1
Tensor sum_cols(const Tensor& a);  // RxC -> Rx1
Tensor slice_cols(const Tensor& a, int begin, int count);
Tensor concat_cols(const Tensor& a, const Tensor& b);
Tensor softmax_rows(const Tensor& a);
Tensor detach(const Tensor& a);

// Batch quadratic advantage -0.5 * ||L^T d||^2 per row, where L is the lower
// triangle unpacked row-major from l_raw with exp() applied to the diagonal.
// l_raw: [B x M(M+1)/2], d: [B x M], result [B x 1].
Tensor quadratic_advantage(const Tensor& l_raw, const Tensor& d);

}  // namespace allocrl
