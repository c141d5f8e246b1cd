#include "windfc/autodiff/tape.hpp"

#include <sstream>

namespace windfc::ad {

std::string shape_string(const Shape& shape) {
  std::ostringstream out;
  out << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) out << (i ? ", " : "") << shape[i];
  out << ']';
  return out.str();
}

template <typename T>
Tensor<T> GradientMap<T>::at(const Var<T>& v) const {
  if (v.id() < grads_.size() && !grads_[v.id()].null()) return grads_[v.id()];
  if (v.id() < shapes_.size()) return Tensor<T>(shapes_[v.id()]);
  return Tensor<T>(v.shape());
}

template <typename T>
Var<T> Tape<T>::leaf(Tensor<T> value, bool requires_grad) {
  if (value.null()) throw Error(ErrorCode::ShapeMismatch, "cannot record a null tensor");
  Node node;
  node.value = std::move(value);
  node.requires_grad = requires_grad;
  node.is_leaf = true;
  node.op = "leaf";
  nodes_.push_back(std::move(node));
  return Var<T>(this, nodes_.size() - 1);
}

template <typename T>
Var<T> Tape<T>::record(Tensor<T> value, std::initializer_list<Var<T>> parents, BackwardRule rule,
                       const char* op) {
  bool needs = false;
  for (const auto& p : parents) {
    if (p.tape() != this) throw Error(ErrorCode::DetachedLoss, std::string(op) + ": operand from another tape");
    needs = needs || nodes_[p.id()].requires_grad;
  }
  Node node;
  node.value = std::move(value);
  node.requires_grad = needs;
  node.op = op;
  if (needs) node.rule = std::move(rule);
  nodes_.push_back(std::move(node));
  return Var<T>(this, nodes_.size() - 1);
}

template <typename T>
Tensor<T>& Tape<T>::grad_buffer(std::size_t id) {
  Node& node = nodes_.at(id);
  if (node.grad.null()) node.grad = Tensor<T>(node.value.shape());
  return node.grad;
}

template <typename T>
void Tape<T>::accumulate_grad(std::size_t id, const Tensor<T>& g) {
  Tensor<T>& buf = grad_buffer(id);
  if (buf.shape() != g.shape()) {
    throw Error(ErrorCode::ShapeMismatch, "gradient " + shape_string(g.shape()) + " for value " +
                                              shape_string(buf.shape()));
  }
  auto dst = buf.data();
  auto src = g.data();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

template <typename T>
GradientMap<T> Tape<T>::backward(const Var<T>& loss) {
  if (loss.tape() != this || loss.id() >= nodes_.size()) {
    throw Error(ErrorCode::DetachedLoss, "loss was not recorded on this tape");
  }
  if (consumed_) throw Error(ErrorCode::DetachedLoss, "tape already used for backward");
  if (nodes_[loss.id()].value.size() != 1) {
    throw Error(ErrorCode::NotScalar, shape_string(nodes_[loss.id()].value.shape()));
  }
  consumed_ = true;
  rule_calls_ = 0;

  GradientMap<T> out;
  out.grads_.resize(nodes_.size());
  out.shapes_.resize(nodes_.size());
  for (std::size_t i = 0; i < nodes_.size(); ++i) out.shapes_[i] = nodes_[i].value.shape();
  if (!nodes_[loss.id()].requires_grad) return out;

  grad_buffer(loss.id()).data()[0] = T(1);
  for (std::size_t i = loss.id() + 1; i-- > 0;) {
    Node& node = nodes_[i];
    if (node.grad.null()) continue;
    if (node.is_leaf) {
      out.grads_[i] = std::move(node.grad);
      continue;
    }
    if (node.rule) {
      node.rule(*this, node.grad);
      ++rule_calls_;
    }
    node.grad = Tensor<T>();  // release intermediate gradients early
  }
  return out;
}

template class GradientMap<float>;
template class GradientMap<double>;
template class Tape<float>;
template class Tape<double>;

}  // namespace windfc::ad
