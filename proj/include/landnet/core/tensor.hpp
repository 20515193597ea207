#ifndef LANDNET_CORE_TENSOR_HPP
#define LANDNET_CORE_TENSOR_HPP

#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <unordered_set>
#include <vector>

#include "landnet/core/common.hpp"

namespace landnet {

/// Thread-local switch for graph recording. Ops executed while disabled
/// produce constant tensors with no parents, so frozen submodules and
/// inference passes cost no autograd bookkeeping.
inline bool& grad_mode() {
  thread_local bool enabled = true;
  return enabled;
}

struct NoGradGuard {
  bool prev;
  NoGradGuard() : prev(grad_mode()) { grad_mode() = false; }
  ~NoGradGuard() { grad_mode() = prev; }
};

/// Reverse-mode autodiff tensor. A Tensor is a cheap shared handle to a node
/// holding values, an optional gradient buffer and, for op results, the
/// backward closure plus parent links. Gradients accumulate (+=) into leaf
/// nodes until zero_grad().
template <typename T>
class Tensor {
 public:
  struct Node {
    std::vector<int> shape;
    std::vector<T> v;
    std::vector<T> g;  // allocated lazily, same length as v
    bool requires_grad = false;
    std::vector<std::shared_ptr<Node>> parents;
    std::function<void(Node&)> backward;

    std::int64_t numel() const {
      std::int64_t n = 1;
      for (int d : shape) n *= d;
      return n;
    }
    void ensure_grad() {
      if (g.size() != v.size()) g.assign(v.size(), T(0));
    }
  };

  Tensor() = default;

  static Tensor zeros(std::vector<int> shape, bool requires_grad = false) {
    Tensor t;
    t.n_ = std::make_shared<Node>();
    t.n_->shape = std::move(shape);
    t.n_->v.assign(static_cast<size_t>(t.n_->numel()), T(0));
    t.n_->requires_grad = requires_grad && grad_mode();
    return t;
  }

  static Tensor full(std::vector<int> shape, T value) {
    Tensor t = zeros(std::move(shape));
    std::fill(t.n_->v.begin(), t.n_->v.end(), value);
    return t;
  }

  static Tensor scalar(T value) { return full({1}, value); }

  static Tensor from(std::vector<int> shape, std::vector<T> data,
                     bool requires_grad = false) {
    Tensor t;
    t.n_ = std::make_shared<Node>();
    t.n_->shape = std::move(shape);
    check_shape(static_cast<std::int64_t>(data.size()) == t.n_->numel(),
                "Tensor::from: data size does not match shape");
    t.n_->v = std::move(data);
    t.n_->requires_grad = requires_grad && grad_mode();
    return t;
  }

  bool defined() const { return static_cast<bool>(n_); }
  const std::vector<int>& shape() const { return n_->shape; }
  int ndim() const { return static_cast<int>(n_->shape.size()); }
  int dim(int i) const {
    if (i < 0) i += ndim();
    return n_->shape[static_cast<size_t>(i)];
  }
  std::int64_t numel() const { return n_->numel(); }

  T* data() { return n_->v.data(); }
  const T* data() const { return n_->v.data(); }
  std::vector<T>& values() { return n_->v; }
  const std::vector<T>& values() const { return n_->v; }

  bool requires_grad() const { return n_->requires_grad; }
  void set_requires_grad(bool rg) { n_->requires_grad = rg; }

  /// Gradient buffer (allocated zero on first access).
  T* grad() {
    n_->ensure_grad();
    return n_->g.data();
  }
  const std::vector<T>& grad_values() const { return n_->g; }
  bool has_grad() const { return n_->g.size() == n_->v.size(); }

  void zero_grad() {
    if (!n_->g.empty()) std::fill(n_->g.begin(), n_->g.end(), T(0));
  }

  T item() const {
    check_shape(numel() == 1, "item() requires a single-element tensor");
    return n_->v[0];
  }

  /// Backpropagate from a scalar. Topological order is rebuilt per call;
  /// the graph itself is freed when the result handles go out of scope.
  void backward() {
    check_shape(numel() == 1, "backward() requires a scalar tensor");
    if (!n_->requires_grad) return;
    std::vector<Node*> order;
    topo_sort(n_.get(), order);
    n_->ensure_grad();
    n_->g[0] = T(1);
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
      Node* node = *it;
      if (node->backward) node->backward(*node);
    }
  }

  std::shared_ptr<Node> node() const { return n_; }

  /// Construct an op result. `backward` receives the result node whose `g`
  /// is fully accumulated; it must += into the parents' grads.
  static Tensor make(std::vector<int> shape,
                     const std::vector<Tensor>& parents,
                     std::function<void(Node&)> backward) {
    Tensor t = zeros(std::move(shape));
    bool rg = false;
    if (grad_mode()) {
      for (const auto& p : parents) rg = rg || p.requires_grad();
    }
    if (rg) {
      t.n_->requires_grad = true;
      t.n_->backward = std::move(backward);
      t.n_->parents.reserve(parents.size());
      for (const auto& p : parents) t.n_->parents.push_back(p.node());
    }
    return t;
  }

 private:
  static void topo_sort(Node* root, std::vector<Node*>& order) {
    // Iterative post-order DFS; graphs can be a few thousand nodes deep.
    std::unordered_set<Node*> visited;
    std::vector<std::pair<Node*, size_t>> stack;
    stack.emplace_back(root, 0);
    visited.insert(root);
    while (!stack.empty()) {
      auto& [node, idx] = stack.back();
      if (idx < node->parents.size()) {
        Node* parent = node->parents[idx++].get();
        if (parent->requires_grad && !visited.count(parent)) {
          visited.insert(parent);
          stack.emplace_back(parent, 0);
        }
      } else {
        order.push_back(node);
        stack.pop_back();
      }
    }
  }

  std::shared_ptr<Node> n_;
};

}  // namespace landnet

#endif  // LANDNET_CORE_TENSOR_HPP
