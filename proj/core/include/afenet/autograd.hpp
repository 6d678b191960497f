#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "afenet/tensor.hpp"

namespace afenet {

/// One value in a recorded computation. Leaves are inputs and parameters;
/// interior nodes carry a closure that pushes their gradient to their parents.
struct Node {
  Tensor value;
  Tensor grad;
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(const Tensor& grad_out)> backward_fn;

  /// Gradient buffer, zero-allocated on first use.
  Tensor& grad_buffer();
};

/// Shared handle to a Node. Copies alias the same value.
class Var {
 public:
  Var() = default;

  static Var constant(Tensor value);
  static Var leaf(Tensor value, bool requires_grad = true);

  bool defined() const { return node_ != nullptr; }
  const Tensor& value() const { return node_->value; }
  /// Direct write access; only legal while no forward pass is in flight.
  Tensor& mutable_value() { return node_->value; }
  const Shape& shape() const { return node_->value.shape(); }
  bool requires_grad() const { return node_->requires_grad; }

  bool has_grad() const { return !node_->grad.empty(); }
  const Tensor& grad() const { return node_->grad; }
  Tensor& grad() { return node_->grad_buffer(); }
  void zero_grad() { node_->grad = Tensor(); }

  const std::shared_ptr<Node>& node() const { return node_; }

 private:
  explicit Var(std::shared_ptr<Node> node) : node_(std::move(node)) {}
  friend Var make_result(Tensor, const std::vector<Var>&,
                         std::function<void(const Tensor&)>);
  std::shared_ptr<Node> node_;
};

/// Whether operations currently record a graph (thread-local).
bool grad_enabled();

/// Disables graph recording for its lifetime.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

/// Wrap an operation result. The backward closure is kept only when grad
/// mode is on and some parent requires a gradient.
Var make_result(Tensor value, const std::vector<Var>& parents,
                std::function<void(const Tensor& grad_out)> backward_fn);

/// Add `g` into the gradient of `v` if it takes part in differentiation.
void accumulate_grad(const Var& v, const Tensor& g);

/// Reverse-mode sweep from `root` seeded with `cotangent`.
void backward(const Var& root, const Tensor& cotangent);

/// Reverse-mode sweep from a single-element `root`, seeded with 1.
void backward(const Var& root);

}  // namespace afenet
