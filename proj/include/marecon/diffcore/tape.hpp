#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "marecon/diffcore/tensor.hpp"
#include "marecon/errors.hpp"

namespace marecon::ad {

using NodeId = std::size_t;

enum class OpKind {
  Leaf,
  Constant,
  Detach,
  Add,
  Subtract,
  Multiply,
  Scale,
  MatVec,
  Conv2d,
  UpsampleNearest2x,
  Relu,
  Sigmoid,
  SumOfSquares,
  ChannelAffine,
  ComplexMultiply,
  SquaredMagnitude,
  Fft2,
  Ifft2,
  Polar,
  Reshape,
  SelectChannel,
};

constexpr std::string_view op_name(OpKind kind) {
  switch (kind) {
    case OpKind::Leaf: return "leaf";
    case OpKind::Constant: return "constant";
    case OpKind::Detach: return "detach";
    case OpKind::Add: return "add";
    case OpKind::Subtract: return "subtract";
    case OpKind::Multiply: return "multiply";
    case OpKind::Scale: return "scale";
    case OpKind::MatVec: return "matvec";
    case OpKind::Conv2d: return "conv2d";
    case OpKind::UpsampleNearest2x: return "upsample-nearest-2x";
    case OpKind::Relu: return "relu";
    case OpKind::Sigmoid: return "sigmoid";
    case OpKind::SumOfSquares: return "sum-of-squares";
    case OpKind::ChannelAffine: return "channel-affine";
    case OpKind::ComplexMultiply: return "complex-multiply";
    case OpKind::SquaredMagnitude: return "squared-magnitude";
    case OpKind::Fft2: return "fft2";
    case OpKind::Ifft2: return "ifft2";
    case OpKind::Polar: return "polar";
    case OpKind::Reshape: return "reshape";
    case OpKind::SelectChannel: return "select-channel";
  }
  return "unknown";
}

/// Everything an adjoint rule may read or write during the backward pass.
/// `grad_inputs[i]` is null when input i does not need a gradient.
struct AdjointContext {
  std::span<const Tensor* const> inputs;
  const Tensor& output;
  const Tensor& grad_output;
  std::span<Tensor* const> grad_inputs;
};

using AdjointRule = std::function<void(const AdjointContext&)>;

class Tape;

/// Lightweight handle to a node on a tape.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, NodeId id) : tape_(tape), id_(id) {}

  Tape& tape() const { return *tape_; }
  NodeId id() const noexcept { return id_; }
  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  bool valid() const noexcept { return tape_ != nullptr; }

 private:
  Tape* tape_ = nullptr;
  NodeId id_ = 0;
};

/// Gradient of a scalar w.r.t. each trainable leaf.
using GradientMap = std::map<NodeId, Tensor>;

/**
 * Append-only record of a computation for reverse-mode differentiation.
 *
 * Nodes are stored in creation order, which is a topological order because
 * a node can only reference nodes that already exist. Single-threaded.
 */
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;
  Tape(Tape&&) = delete;
  Tape& operator=(Tape&&) = delete;

  /// Trainable input; backward() reports a gradient for it.
  Var leaf(Tensor value) { return push(OpKind::Leaf, {}, std::move(value), nullptr, true, true); }

  Var constant(Tensor value) {
    return push(OpKind::Constant, {}, std::move(value), nullptr, false, false);
  }

  /// Record an op whose output value was computed by the caller.
  Var record(OpKind kind, std::vector<NodeId> inputs, Tensor value, AdjointRule rule) {
    bool needs_grad = false;
    for (NodeId in : inputs) {
      check_id(in);
      needs_grad = needs_grad || nodes_[in].needs_grad;
    }
    return push(kind, std::move(inputs), std::move(value), std::move(rule), needs_grad, false);
  }

  /// Same forward value; treated as a constant by backward().
  Var detach(Var x) {
    check_id(x.id());
    Tensor copy = nodes_[x.id()].value;
    return push(OpKind::Detach, {x.id()}, std::move(copy), nullptr, false, false);
  }

  const Tensor& value(NodeId id) const {
    check_id(id);
    return nodes_[id].value;
  }

  OpKind kind(NodeId id) const {
    check_id(id);
    return nodes_[id].kind;
  }

  const std::vector<NodeId>& inputs(NodeId id) const {
    check_id(id);
    return nodes_[id].inputs;
  }

  bool needs_grad(NodeId id) const {
    check_id(id);
    return nodes_[id].needs_grad;
  }

  std::size_t size() const noexcept { return nodes_.size(); }

  /**
   * Reverse sweep from a scalar node. Returns the gradient for every
   * trainable leaf on the tape; leaves the loss does not depend on get zeros.
   */
  GradientMap backward(Var loss) const {
    check_id(loss.id());
    if (loss.value().size() != 1) {
      throw ContractError("backward() needs a scalar loss, got shape " + shape_string(loss.shape()));
    }
    std::vector<std::optional<Tensor>> adjoint(nodes_.size());
    if (nodes_[loss.id()].needs_grad) adjoint[loss.id()] = Tensor(loss.shape(), 1.0);

    std::vector<const Tensor*> in_values;
    std::vector<Tensor*> in_grads;
    for (NodeId id = loss.id() + 1; id-- > 0;) {
      const Node& node = nodes_[id];
      if (!node.needs_grad || !adjoint[id] || !node.rule) continue;
      in_values.clear();
      in_grads.clear();
      for (NodeId in : node.inputs) {
        in_values.push_back(&nodes_[in].value);
        if (nodes_[in].needs_grad) {
          if (!adjoint[in]) adjoint[in] = Tensor(nodes_[in].value.shape());
          in_grads.push_back(&*adjoint[in]);
        } else {
          in_grads.push_back(nullptr);
        }
      }
      node.rule(AdjointContext{in_values, node.value, *adjoint[id], in_grads});
    }

    GradientMap grads;
    for (NodeId id = 0; id < nodes_.size(); ++id) {
      if (!nodes_[id].trainable) continue;
      grads.emplace(id, adjoint[id] ? std::move(*adjoint[id]) : Tensor(nodes_[id].value.shape()));
    }
    return grads;
  }

 private:
  struct Node {
    OpKind kind;
    std::vector<NodeId> inputs;
    Tensor value;
    AdjointRule rule;
    bool needs_grad;
    bool trainable;
  };

  Var push(OpKind kind, std::vector<NodeId> inputs, Tensor value, AdjointRule rule, bool needs_grad,
           bool trainable) {
    nodes_.push_back(Node{kind, std::move(inputs), std::move(value), std::move(rule), needs_grad, trainable});
    return Var(this, nodes_.size() - 1);
  }

  void check_id(NodeId id) const {
    if (id >= nodes_.size()) throw ContractError("node " + std::to_string(id) + " is not on this tape");
  }

  std::deque<Node> nodes_;  // deque: Var::value() references survive later pushes
};

inline const Tensor& Var::value() const { return tape_->value(id_); }

}  // namespace marecon::ad
