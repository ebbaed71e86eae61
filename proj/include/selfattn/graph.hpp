#pragma once

#include "selfattn/tensor.hpp"

#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace selfattn {

template <typename Scalar>
class Graph;

/// Handle to a node of a Graph.
template <typename Scalar>
struct Var {
  Graph<Scalar>* graph = nullptr;
  int id = -1;

  const Tensor<Scalar>& value() const { return graph->value(*this); }
  const Shape& shape() const { return value().shape(); }
  bool valid() const { return graph != nullptr && id >= 0; }
};

/**
 * Define-by-run reverse-mode tape.
 *
 * Nodes are appended in evaluation order, so every input id precedes its
 * consumer and backward() is a single reverse sweep. Nodes that do not
 * depend on any requires_grad leaf carry no backward rule.
 *
 * A graph has a single owner; build it, call backward() once, read grads.
 */
template <typename Scalar>
class Graph {
 public:
  using BackwardFn = std::function<void(Graph&, int)>;

  struct Node {
    std::string op;
    std::vector<int> inputs;
    Tensor<Scalar> value;
    Tensor<Scalar> grad;
    bool requires_grad = false;
    bool has_grad = false;
    BackwardFn backward;
  };

  Var<Scalar> leaf(Tensor<Scalar> value, bool requires_grad = true) {
    Node node;
    node.op = "leaf";
    node.value = std::move(value);
    node.requires_grad = requires_grad;
    nodes_.push_back(std::move(node));
    return {this, static_cast<int>(nodes_.size()) - 1};
  }

  Var<Scalar> constant(Tensor<Scalar> value) { return leaf(std::move(value), false); }

  /// Appends an op node. The backward rule is dropped when no input needs a gradient.
  Var<Scalar> record(std::string op, std::vector<Var<Scalar>> inputs, Tensor<Scalar> value,
                     BackwardFn backward) {
    Node node;
    node.op = std::move(op);
    node.value = std::move(value);
    for (const auto& in : inputs) {
      if (in.graph != this) throw InvalidInputError("op '" + node.op + "' mixes nodes from different graphs");
      node.inputs.push_back(in.id);
      node.requires_grad = node.requires_grad || nodes_[static_cast<std::size_t>(in.id)].requires_grad;
    }
    if (node.requires_grad) node.backward = std::move(backward);
    nodes_.push_back(std::move(node));
    return {this, static_cast<int>(nodes_.size()) - 1};
  }

  const Tensor<Scalar>& value(Var<Scalar> v) const { return node(v.id).value; }
  const Node& node(int id) const { return nodes_.at(static_cast<std::size_t>(id)); }
  std::size_t size() const { return nodes_.size(); }
  bool requires_grad(int id) const { return node(id).requires_grad; }

  /// Gradient of the upstream node `id`; only meaningful inside a backward rule.
  const Tensor<Scalar>& upstream(int id) const { return node(id).grad; }
  const Tensor<Scalar>& input_value(int id, std::size_t k) const { return node(node(id).inputs[k]).value; }
  int input_id(int id, std::size_t k) const { return node(id).inputs[k]; }

  /// Adds `g` into the gradient buffer of node `id` (no-op for constants).
  template <typename Derived>
  void accumulate(int id, const Eigen::MatrixBase<Derived>& g) {
    auto& n = nodes_.at(static_cast<std::size_t>(id));
    if (!n.requires_grad) return;
    touch(n);
    n.grad.mat() += g;
  }

  /// Mutable gradient buffer, zero-initialised on first use.
  Tensor<Scalar>* grad_buffer(int id) {
    auto& n = nodes_.at(static_cast<std::size_t>(id));
    if (!n.requires_grad) return nullptr;
    touch(n);
    return &n.grad;
  }

  /// Seeds d(loss)/d(loss) = 1 and propagates to every requires_grad node.
  void backward(Var<Scalar> loss) {
    auto& seed = nodes_.at(static_cast<std::size_t>(loss.id));
    if (seed.value.size() != 1) {
      throw DimensionError("backward() needs a scalar loss, got shape " + shape_string(seed.value.shape()));
    }
    if (!seed.requires_grad) return;
    touch(seed);
    seed.grad.flat().setOnes();
    for (int id = loss.id; id >= 0; --id) {
      auto& n = nodes_[static_cast<std::size_t>(id)];
      if (n.has_grad && n.backward) n.backward(*this, id);
    }
  }

  /// Gradient of a node after backward(); zero-filled when nothing flowed into it.
  Tensor<Scalar> grad(Var<Scalar> v) const {
    const auto& n = node(v.id);
    if (n.has_grad) return n.grad;
    return Tensor<Scalar>(n.value.shape());
  }

 private:
  static void touch(Node& n) {
    if (!n.has_grad) {
      n.grad = Tensor<Scalar>(n.value.shape());
      n.has_grad = true;
    }
  }

  std::vector<Node> nodes_;
};

}  // namespace selfattn
