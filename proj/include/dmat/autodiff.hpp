// SPDX-License-Identifier: Apache-2.0
//
// Tape-style reverse-mode differentiation over dense double tensors.
//
// A Graph is rebuilt for every forward pass. Leaves are either constants
// (input batches) or parameters; every operation appends one node, so the
// node list is always in topological order and backward is a single reverse
// sweep over it.
#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <optional>
#include <span>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "dmat/tensor.hpp"

namespace dmat {

struct Parameter;

namespace ad {

using NodeId = std::size_t;

enum class OpKind : std::uint8_t {
  kLeaf,
  kMatMul,
  kTranspose,
  kAdd,
  kSub,
  kScalarMul,
  kRelu,
  kSoftmax,
  kLogSoftmax,
  kMean,
  kSum,
  kAbs,
  kConcatRows,
  kPick,
  kGradReverse,
};

std::string_view op_name(OpKind kind);

class Graph;

/// Handle to one node of a Graph. Cheap to copy; valid while the graph lives.
class Var {
 public:
  Var() = default;
  Var(Graph* graph, NodeId id) : graph_(graph), id_(id) {}

  Graph* graph() const { return graph_; }
  NodeId id() const { return id_; }
  const Tensor& value() const;
  const Shape& shape() const { return value().shape; }
  /// Convenience for scalar nodes.
  double item() const;

 private:
  Graph* graph_ = nullptr;
  NodeId id_ = 0;
};

/// Per-node gradients produced by Graph::backward. Nodes that the loss does
/// not depend on report all-zero gradients.
class Gradients {
 public:
  Gradients(const Graph* graph, std::vector<std::vector<double>> by_node)
      : graph_(graph), by_node_(std::move(by_node)) {}

  std::vector<double> of(NodeId id) const;
  std::vector<double> of(Var v) const { return of(v.id()); }
  /// Gradient w.r.t. a parameter registered on the graph; zeros otherwise.
  std::vector<double> of(const Parameter& p) const;

 private:
  const Graph* graph_;
  std::vector<std::vector<double>> by_node_;
};

class Graph {
 public:
  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  /// Input data; no gradient is propagated into it unless requires_grad.
  Var constant(Tensor value, bool requires_grad = false);
  /// Registers a parameter as a leaf. Repeated calls with the same parameter
  /// return the same node so fan-out gradients accumulate.
  Var parameter(const Parameter& p);

  /// Appends a node. Used by the op functions below.
  Var record(OpKind kind, std::vector<NodeId> inputs, Tensor value, double scalar = 0.0,
             std::vector<std::size_t> indices = {});

  /// Reverse sweep from a scalar ([1]-shaped) loss node.
  Gradients backward(Var loss) const;

  std::size_t size() const { return nodes_.size(); }
  OpKind kind(NodeId id) const { return nodes_.at(id).kind; }
  const Tensor& value(NodeId id) const { return nodes_.at(id).value; }
  const std::vector<NodeId>& inputs(NodeId id) const { return nodes_.at(id).inputs; }
  std::optional<NodeId> parameter_node(const Parameter& p) const;

  /// Forward-only mode for finite-difference oracles. The i-th grad_reverse
  /// call evaluates (1 + lambda) * anchors[i] - lambda * x instead of x: the
  /// same value at the anchor, and the slope the backward pass applies.
  void linearize_reversals(std::vector<Tensor> anchors);
  /// Inputs seen by each grad_reverse call so far, in call order.
  const std::vector<Tensor>& reversal_inputs() const { return reversal_inputs_; }
  bool reversals_linearized() const { return linearized_; }
  const Tensor& reversal_anchor(std::size_t i) const;

 private:
  struct Node {
    OpKind kind;
    std::vector<NodeId> inputs;
    Tensor value;
    double scalar;                     // scale factor or reversal weight
    std::vector<std::size_t> indices;  // pick targets
    bool requires_grad;
  };

  std::vector<Node> nodes_;
  std::unordered_map<std::uint64_t, NodeId> param_nodes_;
  std::vector<Tensor> reversal_inputs_;
  std::vector<Tensor> anchors_;
  bool linearized_ = false;

  friend Var grad_reverse(Var x, double lambda);
};

// Primitive operations. All operands must belong to the same graph.

/// [m,k] x [k,n] -> [m,n].
Var matmul(Var a, Var b);
/// [m,n] -> [n,m].
Var transpose(Var a);
/// Same shape, or b of shape [n] / [1,n] broadcast across the rows of a [m,n].
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var scalar_mul(Var a, double c);
Var relu(Var a);
/// Row-wise over a 2-D tensor.
Var softmax(Var a);
Var log_softmax(Var a);
/// Reductions over every element to shape [1].
Var mean(Var a);
Var sum(Var a);
Var abs(Var a);
/// Stacks 2-D operands with equal column counts.
Var concat_rows(std::span<const Var> parts);
Var concat_rows(std::initializer_list<Var> parts);
/// out[i] = a[i, indices[i]] for a 2-D a; shape [m].
Var pick(Var a, std::vector<std::size_t> indices);
/// Identity forward; backward multiplies the upstream gradient by -lambda.
Var grad_reverse(Var x, double lambda);

/// Dispatches to the op named by kind. scalar is the factor for kScalarMul
/// and the weight for kGradReverse; indices feed kPick.
Var primitive_forward(OpKind kind, std::span<const Var> inputs, double scalar = 0.0,
                      std::vector<std::size_t> indices = {});

}  // namespace ad
}  // namespace dmat
