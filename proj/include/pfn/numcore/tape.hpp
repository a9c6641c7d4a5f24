#pragma once

#include <functional>
#include <vector>

#include "pfn/numcore/tensor.hpp"

namespace pfn {

template <class Scalar>
class GradTape;

/// Handle to a value recorded on a GradTape.
template <class Scalar>
struct Var {
  GradTape<Scalar>* tape = nullptr;
  Index id = -1;

  const Tensor<Scalar>& value() const;
  const Tensor<Scalar>& grad() const;
  bool requires_grad() const;
  const Shape& shape() const { return value().shape(); }
};

/// Records operations in creation order. Creation order is a topological order,
/// so backward() walks nodes once in reverse and accumulates into input grads.
template <class Scalar>
class GradTape {
 public:
  using BackwardFn = std::function<void(GradTape&, Index self)>;

  GradTape() = default;
  GradTape(const GradTape&) = delete;
  GradTape& operator=(const GradTape&) = delete;

  /// With recording off no backward closures are kept and no node requires grad.
  void set_recording(bool on) { recording_ = on; }
  bool recording() const { return recording_; }

  Var<Scalar> leaf(Tensor<Scalar> value, bool requires_grad = true) {
    return push(std::move(value), requires_grad && recording_, nullptr);
  }

  Var<Scalar> constant(Tensor<Scalar> value) { return push(std::move(value), false, nullptr); }

  Var<Scalar> push(Tensor<Scalar> value, bool requires_grad, BackwardFn backward) {
    Node node;
    node.value = std::move(value);
    node.requires_grad = requires_grad && recording_;
    if (node.requires_grad) node.backward = std::move(backward);
    nodes_.push_back(std::move(node));
    return Var<Scalar>{this, static_cast<Index>(nodes_.size()) - 1};
  }

  const Tensor<Scalar>& value(Index id) const { return nodes_[id].value; }
  bool requires_grad(Index id) const { return nodes_[id].requires_grad; }

  /// Gradient buffer of a node, allocated as zeros on first touch.
  Tensor<Scalar>& grad_buffer(Index id) {
    Node& n = nodes_[id];
    if (!n.grad_ready) {
      n.grad = Tensor<Scalar>(n.value.shape());
      n.grad_ready = true;
    }
    return n.grad;
  }

  const Tensor<Scalar>& grad(Index id) {
    return grad_buffer(id);
  }

  void backward(const Var<Scalar>& loss) {
    require(loss.tape == this, ErrorKind::contract, "loss recorded on a different tape");
    require(nodes_[loss.id].value.size() == 1, ErrorKind::contract,
            "backward() needs a scalar loss, got shape " + shape_str(nodes_[loss.id].value.shape()));
    grad_buffer(loss.id)[0] = Scalar(1);
    for (Index id = loss.id; id >= 0; --id) {
      Node& n = nodes_[id];
      if (!n.requires_grad || !n.grad_ready || !n.backward) continue;
      n.backward(*this, id);
    }
  }

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor<Scalar> value;
    Tensor<Scalar> grad;
    bool grad_ready = false;
    bool requires_grad = false;
    BackwardFn backward;
  };

  std::vector<Node> nodes_;
  bool recording_ = true;
};

template <class Scalar>
const Tensor<Scalar>& Var<Scalar>::value() const {
  return tape->value(id);
}

template <class Scalar>
const Tensor<Scalar>& Var<Scalar>::grad() const {
  return tape->grad(id);
}

template <class Scalar>
bool Var<Scalar>::requires_grad() const {
  return tape->requires_grad(id);
}

}  // namespace pfn
