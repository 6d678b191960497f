#include "afenet/autograd.hpp"

#include <unordered_set>

#include "afenet/error.hpp"

namespace afenet {

namespace {
thread_local bool g_grad_enabled = true;
}  // namespace

Tensor& Node::grad_buffer() {
  if (grad.empty() && value.numel() > 0) grad = Tensor(value.shape());
  return grad;
}

Var Var::constant(Tensor value) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  return Var(std::move(node));
}

Var Var::leaf(Tensor value, bool requires_grad) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  node->requires_grad = requires_grad;
  return Var(std::move(node));
}

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

Var make_result(Tensor value, const std::vector<Var>& parents,
                std::function<void(const Tensor&)> backward_fn) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  if (g_grad_enabled) {
    for (const Var& p : parents) {
      if (p.defined() && p.requires_grad()) {
        node->requires_grad = true;
        break;
      }
    }
  }
  if (node->requires_grad) {
    node->parents.reserve(parents.size());
    for (const Var& p : parents) {
      if (p.defined()) node->parents.push_back(p.node());
    }
    node->backward_fn = std::move(backward_fn);
  }
  return Var(std::move(node));
}

void accumulate_grad(const Var& v, const Tensor& g) {
  if (!v.defined() || !v.requires_grad()) return;
  Tensor& buf = v.node()->grad_buffer();
  if (buf.numel() != g.numel()) throw ShapeError("gradient shape mismatch");
  buf.add_(g);
}

void backward(const Var& root, const Tensor& cotangent) {
  if (!root.defined() || !root.requires_grad()) {
    throw Unsupported("backward: root does not depend on any trainable value");
  }
  if (cotangent.numel() != root.value().numel()) {
    throw ShapeError("backward: cotangent shape " + cotangent.shape().str() +
                     " does not match " + root.shape().str());
  }

  // Iterative post-order DFS gives a topological order (parents first).
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, std::size_t>> stack;
  stack.emplace_back(root.node().get(), 0);
  visited.insert(root.node().get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node* parent = node->parents[next++].get();
      if (parent->requires_grad && visited.insert(parent).second) {
        stack.emplace_back(parent, 0);
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  root.node()->grad_buffer().add_(cotangent);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* node = *it;
    if (node->backward_fn && !node->grad.empty()) node->backward_fn(node->grad);
  }
}

void backward(const Var& root) {
  if (root.value().numel() != 1) {
    throw ShapeError("backward: implicit cotangent needs a single-element root");
  }
  backward(root, Tensor(root.shape(), 1.0));
}

}  // namespace afenet
