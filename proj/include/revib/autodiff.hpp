#pragma once

// Tensor-level reverse-mode differentiation.
//
// Every op returns a Var whose node remembers its parents and a backward
// closure, but only when gradient recording is enabled and at least one
// parent requires a gradient. Parameters are leaf Vars with
// requires_grad set; their gradients accumulate until cleared.

#include <functional>
#include <memory>
#include <vector>

#include "revib/tensor.hpp"

namespace revib::nn {

struct Node {
  Tensor value;
  Tensor grad;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward_fn;
  bool requires_grad = false;
  bool released = false;

  Tensor& grad_buffer();
};

class Var {
 public:
  Var() = default;
  explicit Var(std::shared_ptr<Node> node) : node_(std::move(node)) {}

  static Var constant(Tensor value);
  static Var leaf(Tensor value);  // requires_grad = true

  bool defined() const { return node_ != nullptr; }
  const Tensor& value() const { return node_->value; }
  Tensor& mutable_value() { return node_->value; }
  const Tensor& grad() const { return node_->grad; }
  const Shape& shape() const { return node_->value.shape(); }
  bool requires_grad() const { return node_ && node_->requires_grad; }
  void zero_grad();

  // Same value, cut from the graph.
  Var detach() const { return constant(node_->value); }

  const std::shared_ptr<Node>& node() const { return node_; }

 private:
  std::shared_ptr<Node> node_;
};

// Disables graph recording on this thread for the guard's lifetime.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

bool grad_enabled();

// Back-propagates from a scalar. Gradients accumulate into every leaf
// reachable from `loss`; the intermediate graph is released afterwards.
void backward(const Var& loss);

// x[..., k] * w[k, m] -> [..., m]
Var matmul(const Var& x, const Var& w);
// a[r, k] * b[m, k]^T -> [r, m]
Var matmul_nt(const Var& a, const Var& b);
// a + b, with b either the same shape or a vector broadcast over rows of a.
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var scale(const Var& a, double s);
Var add_n(const std::vector<Var>& terms);

Var tanh(const Var& x);
Var relu(const Var& x);
Var softmax_rows(const Var& x);
Var layer_norm(const Var& x, const Var& gamma, const Var& beta, double eps = 1e-5);

// Per-row flattened outer product: [r, m] -> [r, m*m].
Var row_outer(const Var& x);

Var concat_cols(const std::vector<Var>& parts);
Var concat_rows(const std::vector<Var>& parts);
Var slice_cols(const Var& x, std::size_t start, std::size_t count);
Var slice_rows(const Var& x, std::size_t start, std::size_t count);
Var reshape(const Var& x, Shape shape);

Var sum(const Var& x);
Var square_sum(const Var& x);
// Scalar square root; the derivative at 0 is taken as 0.
Var sqrt_scalar(const Var& x);

}  // namespace revib::nn
