#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <string>
#include <vector>

#include "windfc/autodiff/tensor.hpp"

namespace windfc::ad {

template <typename T>
class Tape;

/// Handle to a value recorded on a tape.
template <typename T>
class Var {
 public:
  Var() = default;
  Var(Tape<T>* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape<T>* tape() const { return tape_; }
  std::size_t id() const { return id_; }
  bool attached() const { return tape_ != nullptr; }

  const Tensor<T>& value() const;
  const Shape& shape() const { return value().shape(); }
  bool requires_grad() const;

 private:
  Tape<T>* tape_ = nullptr;
  std::size_t id_ = 0;
};

template <typename T>
class GradientMap {
 public:
  /// Gradient of the loss w.r.t. `v`; zeros when the loss does not depend on it.
  Tensor<T> at(const Var<T>& v) const;
  bool contains(const Var<T>& v) const { return v.id() < grads_.size() && !grads_[v.id()].null(); }

 private:
  friend class Tape<T>;
  std::vector<Tensor<T>> grads_;
  std::vector<Shape> shapes_;
};

/// Execution record for reverse-mode differentiation.
///
/// Nodes are appended in execution order, which is therefore a topological
/// order; backward walks it once in reverse. A tape supports a single
/// backward call.
template <typename T>
class Tape {
 public:
  /// Receives the node's output gradient; must accumulate into its parents
  /// through `accumulate_grad` / `grad_buffer`.
  using BackwardRule = std::function<void(Tape& tape, const Tensor<T>& out_grad)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var<T> leaf(Tensor<T> value, bool requires_grad = true);
  Var<T> constant(Tensor<T> value) { return leaf(std::move(value), false); }

  /// Appends a primitive's output. The rule is dropped when no parent needs
  /// a gradient.
  Var<T> record(Tensor<T> value, std::initializer_list<Var<T>> parents, BackwardRule rule, const char* op);

  const Tensor<T>& value(std::size_t id) const { return nodes_.at(id).value; }
  bool requires_grad(std::size_t id) const { return nodes_.at(id).requires_grad; }
  const std::string& op(std::size_t id) const { return nodes_.at(id).op; }
  std::size_t size() const { return nodes_.size(); }

  /// Zero-initialized on first use. Only call for nodes that require grad.
  Tensor<T>& grad_buffer(std::size_t id);
  void accumulate_grad(std::size_t id, const Tensor<T>& g);

  GradientMap<T> backward(const Var<T>& loss);

  bool consumed() const { return consumed_; }
  /// Number of backward rules run by the last backward call.
  std::size_t backward_rule_calls() const { return rule_calls_; }

 private:
  struct Node {
    Tensor<T> value;
    Tensor<T> grad;
    bool requires_grad = false;
    bool is_leaf = false;
    BackwardRule rule;
    std::string op;
  };

  std::vector<Node> nodes_;
  bool consumed_ = false;
  std::size_t rule_calls_ = 0;
};

template <typename T>
const Tensor<T>& Var<T>::value() const {
  if (!tape_) throw Error(ErrorCode::DetachedLoss, "variable is not attached to a tape");
  return tape_->value(id_);
}

template <typename T>
bool Var<T>::requires_grad() const {
  return tape_ && tape_->requires_grad(id_);
}

}  // namespace windfc::ad
