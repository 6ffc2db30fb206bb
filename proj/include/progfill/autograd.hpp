#pragma once

// Minimal reverse-mode differentiation over Tensor values. Every op returns a
// new Node that remembers its inputs and a closure pushing its gradient back
// into them. Parameters are long-lived leaf nodes; everything else lives only
// as long as the graph built by one forward pass.

#include <functional>
#include <memory>
#include <unordered_set>
#include <utility>
#include <vector>

#include "progfill/tensor.hpp"

namespace progfill {

template <typename T>
struct Node {
  Tensor<T> value;
  Tensor<T> grad;  // empty until something flows in
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> inputs;
  std::function<void(Node&)> backward;

  Tensor<T>& grad_buffer() {
    if (grad.empty() && !value.empty()) grad = Tensor<T>(value.shape());
    return grad;
  }
  void accumulate(const Tensor<T>& g) {
    require_same_shape(value, g, "gradient accumulation");
    auto& dst = grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) dst[i] += g[i];
  }
  void zero_grad() { grad = Tensor<T>(); }
};

template <typename T>
using Var = std::shared_ptr<Node<T>>;

namespace detail {
inline thread_local bool grad_mode_enabled = true;
}

inline bool grad_enabled() { return detail::grad_mode_enabled; }

// Disables graph recording on the current thread for the guard's lifetime.
class NoGradGuard {
 public:
  NoGradGuard() : previous_(detail::grad_mode_enabled) { detail::grad_mode_enabled = false; }
  ~NoGradGuard() { detail::grad_mode_enabled = previous_; }
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

template <typename T>
Var<T> constant(Tensor<T> value) {
  auto node = std::make_shared<Node<T>>();
  node->value = std::move(value);
  return node;
}

template <typename T>
Var<T> leaf(Tensor<T> value, bool requires_grad) {
  auto node = constant(std::move(value));
  node->requires_grad = requires_grad;
  return node;
}

// Creates the result node of an op. The closure is dropped when no input
// needs a gradient or recording is off.
template <typename T>
Var<T> make_result(Tensor<T> value, std::vector<Var<T>> inputs, std::function<void(Node<T>&)> backward) {
  auto node = std::make_shared<Node<T>>();
  node->value = std::move(value);
  bool needs = false;
  if (grad_enabled())
    for (const auto& in : inputs) needs = needs || (in && in->requires_grad);
  if (needs) {
    node->requires_grad = true;
    node->inputs = std::move(inputs);
    node->backward = std::move(backward);
  }
  return node;
}

// Runs reverse accumulation from several roots at once, each seeded with
// dLoss/dRoot.
template <typename T>
void backward(const std::vector<std::pair<Var<T>, Tensor<T>>>& seeds) {
  std::vector<Node<T>*> order;
  std::unordered_set<Node<T>*> visited;
  // Iterative post-order DFS; graphs can be hundreds of ops deep.
  std::vector<std::pair<Node<T>*, std::size_t>> stack;
  for (const auto& [root, seed] : seeds) {
    if (!root || !root->requires_grad) continue;
    if (visited.insert(root.get()).second) stack.emplace_back(root.get(), 0);
    while (!stack.empty()) {
      auto& [node, next] = stack.back();
      if (next < node->inputs.size()) {
        Node<T>* child = node->inputs[next++].get();
        if (child && child->requires_grad && visited.insert(child).second) stack.emplace_back(child, 0);
      } else {
        order.push_back(node);
        stack.pop_back();
      }
    }
  }
  for (const auto& [root, seed] : seeds)
    if (root && root->requires_grad) root->accumulate(seed);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node<T>* node = *it;
    if (node->backward && !node->grad.empty()) node->backward(*node);
  }
}

template <typename T>
void backward(const Var<T>& root, const Tensor<T>& seed) {
  backward<T>({{root, seed}});
}

}  // namespace progfill
