// SPDX-License-Identifier: Apache-2.0
#include "dmat/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "dmat/errors.hpp"
#include "dmat/parameter.hpp"

namespace dmat {

namespace ad {

std::string_view op_name(OpKind kind) {
  switch (kind) {
    case OpKind::kLeaf: return "leaf";
    case OpKind::kMatMul: return "matmul";
    case OpKind::kTranspose: return "transpose";
    case OpKind::kAdd: return "add";
    case OpKind::kSub: return "sub";
    case OpKind::kScalarMul: return "scalar_mul";
    case OpKind::kRelu: return "relu";
    case OpKind::kSoftmax: return "softmax";
    case OpKind::kLogSoftmax: return "log_softmax";
    case OpKind::kMean: return "mean";
    case OpKind::kSum: return "sum";
    case OpKind::kAbs: return "abs";
    case OpKind::kConcatRows: return "concat_rows";
    case OpKind::kPick: return "pick";
    case OpKind::kGradReverse: return "grad_reverse";
  }
  return "unknown";
}

const Tensor& Var::value() const {
  if (!graph_) throw ContractError("Var: handle is not bound to a graph");
  return graph_->value(id_);
}

double Var::item() const {
  const Tensor& v = value();
  if (v.size() != 1) throw ContractError("Var::item: node is not a scalar, shape " + to_string(v.shape));
  return v.data[0];
}

std::vector<double> Gradients::of(NodeId id) const {
  if (id < by_node_.size() && !by_node_[id].empty()) return by_node_[id];
  return std::vector<double>(graph_->value(id).size(), 0.0);
}

std::vector<double> Gradients::of(const Parameter& p) const {
  if (auto id = graph_->parameter_node(p)) return of(*id);
  return std::vector<double>(p.value.size(), 0.0);
}

Var Graph::constant(Tensor value, bool requires_grad) {
  nodes_.push_back({OpKind::kLeaf, {}, std::move(value), 0.0, {}, requires_grad});
  return {this, nodes_.size() - 1};
}

Var Graph::parameter(const Parameter& p) {
  if (auto it = param_nodes_.find(p.id); it != param_nodes_.end()) return {this, it->second};
  Var v = constant(p.value, true);
  param_nodes_.emplace(p.id, v.id());
  return v;
}

std::optional<NodeId> Graph::parameter_node(const Parameter& p) const {
  if (auto it = param_nodes_.find(p.id); it != param_nodes_.end()) return it->second;
  return std::nullopt;
}

void Graph::linearize_reversals(std::vector<Tensor> anchors) {
  anchors_ = std::move(anchors);
  linearized_ = true;
}

const Tensor& Graph::reversal_anchor(std::size_t i) const {
  if (i >= anchors_.size())
    throw ContractError("linearized grad_reverse: no anchor for call " + std::to_string(i));
  return anchors_[i];
}

Var Graph::record(OpKind kind, std::vector<NodeId> inputs, Tensor value, double scalar,
                  std::vector<std::size_t> indices) {
  bool requires_grad = false;
  for (NodeId in : inputs) requires_grad = requires_grad || nodes_.at(in).requires_grad;
  nodes_.push_back(
      {kind, std::move(inputs), std::move(value), scalar, std::move(indices), requires_grad});
  return {this, nodes_.size() - 1};
}

Gradients Graph::backward(Var loss) const {
  if (loss.graph() != this) throw ContractError("backward: loss belongs to a different graph");
  const Tensor& lv = value(loss.id());
  if (lv.size() != 1) {
    throw ContractError("backward: loss must be a scalar, got shape " + to_string(lv.shape));
  }

  std::vector<std::vector<double>> grads(nodes_.size());
  auto slot = [&](NodeId id) -> std::vector<double>* {
    if (!nodes_[id].requires_grad) return nullptr;
    auto& g = grads[id];
    if (g.empty()) g.assign(nodes_[id].value.size(), 0.0);
    return &g;
  };

  grads[loss.id()].assign(1, 1.0);
  for (NodeId id = loss.id() + 1; id-- > 0;) {
    const Node& node = nodes_[id];
    if (!node.requires_grad || grads[id].empty() || node.kind == OpKind::kLeaf) continue;
    const std::vector<double>& g = grads[id];
    const Tensor& out = node.value;

    switch (node.kind) {
      case OpKind::kLeaf:
        break;
      case OpKind::kMatMul: {
        const Tensor& a = nodes_[node.inputs[0]].value;
        const Tensor& b = nodes_[node.inputs[1]].value;
        const std::size_t m = a.shape[0], k = a.shape[1], n = b.shape[1];
        if (auto* ga = slot(node.inputs[0])) {
          for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < n; ++j) {
              const double gij = g[i * n + j];
              if (gij == 0.0) continue;
              for (std::size_t p = 0; p < k; ++p) (*ga)[i * k + p] += gij * b.data[p * n + j];
            }
        }
        if (auto* gb = slot(node.inputs[1])) {
          for (std::size_t i = 0; i < m; ++i)
            for (std::size_t p = 0; p < k; ++p) {
              const double aip = a.data[i * k + p];
              for (std::size_t j = 0; j < n; ++j) (*gb)[p * n + j] += aip * g[i * n + j];
            }
        }
        break;
      }
      case OpKind::kTranspose: {
        if (auto* ga = slot(node.inputs[0])) {
          const std::size_t r = out.shape[0], c = out.shape[1];
          for (std::size_t i = 0; i < r; ++i)
            for (std::size_t j = 0; j < c; ++j) (*ga)[j * r + i] += g[i * c + j];
        }
        break;
      }
      case OpKind::kAdd:
      case OpKind::kSub: {
        const double sign = node.kind == OpKind::kAdd ? 1.0 : -1.0;
        if (auto* ga = slot(node.inputs[0]))
          for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i];
        if (auto* gb = slot(node.inputs[1])) {
          const std::size_t nb = gb->size();
          for (std::size_t i = 0; i < g.size(); ++i) (*gb)[i % nb] += sign * g[i];
        }
        break;
      }
      case OpKind::kScalarMul: {
        if (auto* ga = slot(node.inputs[0]))
          for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += node.scalar * g[i];
        break;
      }
      case OpKind::kRelu: {
        const Tensor& x = nodes_[node.inputs[0]].value;
        if (auto* ga = slot(node.inputs[0]))
          for (std::size_t i = 0; i < g.size(); ++i)
            if (x.data[i] > 0.0) (*ga)[i] += g[i];
        break;
      }
      case OpKind::kSoftmax: {
        if (auto* ga = slot(node.inputs[0])) {
          const std::size_t r = out.rows(), c = out.cols();
          for (std::size_t i = 0; i < r; ++i) {
            double dot = 0.0;
            for (std::size_t j = 0; j < c; ++j) dot += g[i * c + j] * out.data[i * c + j];
            for (std::size_t j = 0; j < c; ++j)
              (*ga)[i * c + j] += out.data[i * c + j] * (g[i * c + j] - dot);
          }
        }
        break;
      }
      case OpKind::kLogSoftmax: {
        if (auto* ga = slot(node.inputs[0])) {
          const std::size_t r = out.rows(), c = out.cols();
          for (std::size_t i = 0; i < r; ++i) {
            double gsum = 0.0;
            for (std::size_t j = 0; j < c; ++j) gsum += g[i * c + j];
            for (std::size_t j = 0; j < c; ++j)
              (*ga)[i * c + j] += g[i * c + j] - std::exp(out.data[i * c + j]) * gsum;
          }
        }
        break;
      }
      case OpKind::kMean: {
        if (auto* ga = slot(node.inputs[0])) {
          const double scale = g[0] / static_cast<double>(ga->size());
          for (double& v : *ga) v += scale;
        }
        break;
      }
      case OpKind::kSum: {
        if (auto* ga = slot(node.inputs[0]))
          for (double& v : *ga) v += g[0];
        break;
      }
      case OpKind::kAbs: {
        const Tensor& x = nodes_[node.inputs[0]].value;
        if (auto* ga = slot(node.inputs[0]))
          for (std::size_t i = 0; i < g.size(); ++i) {
            if (x.data[i] > 0.0) (*ga)[i] += g[i];
            else if (x.data[i] < 0.0) (*ga)[i] -= g[i];
          }
        break;
      }
      case OpKind::kConcatRows: {
        std::size_t offset = 0;
        for (NodeId in : node.inputs) {
          const std::size_t n = nodes_[in].value.size();
          if (auto* ga = slot(in))
            for (std::size_t i = 0; i < n; ++i) (*ga)[i] += g[offset + i];
          offset += n;
        }
        break;
      }
      case OpKind::kPick: {
        if (auto* ga = slot(node.inputs[0])) {
          const std::size_t c = nodes_[node.inputs[0]].value.cols();
          for (std::size_t i = 0; i < node.indices.size(); ++i)
            (*ga)[i * c + node.indices[i]] += g[i];
        }
        break;
      }
      case OpKind::kGradReverse: {
        if (auto* ga = slot(node.inputs[0])) {
          const double factor = -node.scalar;
          for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += factor * g[i];
        }
        break;
      }
    }
  }
  return Gradients(this, std::move(grads));
}

namespace {

Graph& same_graph(std::string_view op, Var a, Var b) {
  if (!a.graph() || a.graph() != b.graph())
    throw ContractError(std::string(op) + ": operands belong to different graphs");
  return *a.graph();
}

Graph& graph_of(std::string_view op, Var a) {
  if (!a.graph()) throw ContractError(std::string(op) + ": unbound operand");
  return *a.graph();
}

[[noreturn]] void shape_error(std::string_view op, const Shape& a, const Shape& b) {
  throw DimensionError(std::string(op) + ": incompatible shapes " + to_string(a) + " and " +
                       to_string(b));
}

void require_matrix(std::string_view op, const Shape& s) {
  if (s.size() != 2)
    throw DimensionError(std::string(op) + ": expected a 2-D tensor, got " + to_string(s));
}

Var elementwise_binary(OpKind kind, Var a, Var b) {
  const std::string_view op = op_name(kind);
  Graph& g = same_graph(op, a, b);
  const Tensor& x = a.value();
  const Tensor& y = b.value();
  const bool same = x.shape == y.shape;
  const bool row_broadcast = x.rank() == 2 && y.size() == x.cols() &&
                             (y.shape == Shape{x.cols()} || y.shape == Shape{1, x.cols()});
  if (!same && !row_broadcast) shape_error(op, x.shape, y.shape);

  Tensor out = x;
  const double sign = kind == OpKind::kAdd ? 1.0 : -1.0;
  const std::size_t ny = y.size();
  for (std::size_t i = 0; i < out.size(); ++i) out.data[i] += sign * y.data[i % ny];
  return g.record(kind, {a.id(), b.id()}, std::move(out));
}

}  // namespace

Var matmul(Var a, Var b) {
  Graph& g = same_graph("matmul", a, b);
  const Tensor& x = a.value();
  const Tensor& y = b.value();
  if (x.rank() != 2 || y.rank() != 2 || x.shape[1] != y.shape[0])
    shape_error("matmul", x.shape, y.shape);
  const std::size_t m = x.shape[0], k = x.shape[1], n = y.shape[1];
  Tensor out = Tensor::zeros({m, n});
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t p = 0; p < k; ++p) {
      const double xip = x.data[i * k + p];
      for (std::size_t j = 0; j < n; ++j) out.data[i * n + j] += xip * y.data[p * n + j];
    }
  return g.record(OpKind::kMatMul, {a.id(), b.id()}, std::move(out));
}

Var transpose(Var a) {
  Graph& g = graph_of("transpose", a);
  const Tensor& x = a.value();
  require_matrix("transpose", x.shape);
  const std::size_t r = x.shape[0], c = x.shape[1];
  Tensor out = Tensor::zeros({c, r});
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out.data[j * r + i] = x.data[i * c + j];
  return g.record(OpKind::kTranspose, {a.id()}, std::move(out));
}

Var add(Var a, Var b) { return elementwise_binary(OpKind::kAdd, a, b); }

Var sub(Var a, Var b) { return elementwise_binary(OpKind::kSub, a, b); }

Var scalar_mul(Var a, double c) {
  Graph& g = graph_of("scalar_mul", a);
  Tensor out = a.value();
  for (double& v : out.data) v *= c;
  return g.record(OpKind::kScalarMul, {a.id()}, std::move(out), c);
}

Var relu(Var a) {
  Graph& g = graph_of("relu", a);
  Tensor out = a.value();
  for (double& v : out.data) v = v > 0.0 ? v : 0.0;
  return g.record(OpKind::kRelu, {a.id()}, std::move(out));
}

Var softmax(Var a) {
  Graph& g = graph_of("softmax", a);
  Tensor out = a.value();
  require_matrix("softmax", out.shape);
  const std::size_t r = out.rows(), c = out.cols();
  if (c == 0) throw DomainError("softmax: empty row");
  for (std::size_t i = 0; i < r; ++i) {
    double* row = out.data.data() + i * c;
    const double mx = *std::max_element(row, row + c);
    double z = 0.0;
    for (std::size_t j = 0; j < c; ++j) z += (row[j] = std::exp(row[j] - mx));
    for (std::size_t j = 0; j < c; ++j) row[j] /= z;
  }
  return g.record(OpKind::kSoftmax, {a.id()}, std::move(out));
}

Var log_softmax(Var a) {
  Graph& g = graph_of("log_softmax", a);
  Tensor out = a.value();
  require_matrix("log_softmax", out.shape);
  const std::size_t r = out.rows(), c = out.cols();
  if (c == 0) throw DomainError("log_softmax: empty row");
  for (std::size_t i = 0; i < r; ++i) {
    double* row = out.data.data() + i * c;
    const double mx = *std::max_element(row, row + c);
    double z = 0.0;
    for (std::size_t j = 0; j < c; ++j) z += std::exp(row[j] - mx);
    const double lse = mx + std::log(z);
    for (std::size_t j = 0; j < c; ++j) row[j] -= lse;
  }
  return g.record(OpKind::kLogSoftmax, {a.id()}, std::move(out));
}

Var mean(Var a) {
  Graph& g = graph_of("mean", a);
  const Tensor& x = a.value();
  if (x.size() == 0) throw DomainError("mean: empty tensor " + to_string(x.shape));
  double s = 0.0;
  for (double v : x.data) s += v;
  return g.record(OpKind::kMean, {a.id()}, Tensor::scalar(s / static_cast<double>(x.size())));
}

Var sum(Var a) {
  Graph& g = graph_of("sum", a);
  double s = 0.0;
  for (double v : a.value().data) s += v;
  return g.record(OpKind::kSum, {a.id()}, Tensor::scalar(s));
}

Var abs(Var a) {
  Graph& g = graph_of("abs", a);
  Tensor out = a.value();
  for (double& v : out.data) v = std::fabs(v);
  return g.record(OpKind::kAbs, {a.id()}, std::move(out));
}

Var concat_rows(std::span<const Var> parts) {
  if (parts.empty()) throw ContractError("concat_rows: no operands");
  Graph& g = graph_of("concat_rows", parts[0]);
  const Tensor& first = parts[0].value();
  require_matrix("concat_rows", first.shape);
  std::vector<NodeId> ids;
  std::vector<double> data;
  std::size_t rows = 0;
  for (const Var& p : parts) {
    same_graph("concat_rows", parts[0], p);
    const Tensor& t = p.value();
    if (t.rank() != 2 || t.cols() != first.cols()) shape_error("concat_rows", first.shape, t.shape);
    rows += t.shape[0];
    data.insert(data.end(), t.data.begin(), t.data.end());
    ids.push_back(p.id());
  }
  return g.record(OpKind::kConcatRows, std::move(ids),
                  Tensor({rows, first.cols()}, std::move(data)));
}

Var concat_rows(std::initializer_list<Var> parts) {
  return concat_rows(std::span<const Var>(parts.begin(), parts.size()));
}

Var pick(Var a, std::vector<std::size_t> indices) {
  Graph& g = graph_of("pick", a);
  const Tensor& x = a.value();
  require_matrix("pick", x.shape);
  if (indices.size() != x.shape[0])
    shape_error("pick", x.shape, Shape{indices.size()});
  Tensor out = Tensor::zeros({indices.size()});
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= x.cols())
      throw ContractError("pick: index " + std::to_string(indices[i]) + " out of range for " +
                          std::to_string(x.cols()) + " columns");
    out.data[i] = x.at(i, indices[i]);
  }
  return g.record(OpKind::kPick, {a.id()}, std::move(out), 0.0, std::move(indices));
}

Var grad_reverse(Var x, double lambda) {
  Graph& g = graph_of("grad_reverse", x);
  if (!(lambda >= 0.0))
    throw ContractError("grad_reverse: lambda must be >= 0, got " + std::to_string(lambda));
  const std::size_t call = g.reversal_inputs_.size();
  g.reversal_inputs_.push_back(x.value());
  if (g.linearized_) {
    const Tensor& anchor = g.reversal_anchor(call);
    if (anchor.shape != x.shape()) shape_error("grad_reverse", anchor.shape, x.shape());
    Var pinned = g.constant(anchor);
    return add(scalar_mul(x, -lambda), scalar_mul(pinned, 1.0 + lambda));
  }
  return g.record(OpKind::kGradReverse, {x.id()}, x.value(), lambda);
}

Var primitive_forward(OpKind kind, std::span<const Var> in, double scalar,
                      std::vector<std::size_t> indices) {
  auto arity = [&](std::size_t n) {
    if (in.size() != n)
      throw ContractError(std::string(op_name(kind)) + ": expected " + std::to_string(n) +
                          " inputs, got " + std::to_string(in.size()));
  };
  switch (kind) {
    case OpKind::kMatMul: arity(2); return matmul(in[0], in[1]);
    case OpKind::kTranspose: arity(1); return transpose(in[0]);
    case OpKind::kAdd: arity(2); return add(in[0], in[1]);
    case OpKind::kSub: arity(2); return sub(in[0], in[1]);
    case OpKind::kScalarMul: arity(1); return scalar_mul(in[0], scalar);
    case OpKind::kRelu: arity(1); return relu(in[0]);
    case OpKind::kSoftmax: arity(1); return softmax(in[0]);
    case OpKind::kLogSoftmax: arity(1); return log_softmax(in[0]);
    case OpKind::kMean: arity(1); return mean(in[0]);
    case OpKind::kSum: arity(1); return sum(in[0]);
    case OpKind::kAbs: arity(1); return abs(in[0]);
    case OpKind::kConcatRows: return concat_rows(in);
    case OpKind::kPick: arity(1); return pick(in[0], std::move(indices));
    case OpKind::kGradReverse: arity(1); return grad_reverse(in[0], scalar);
    case OpKind::kLeaf: break;
  }
  throw ContractError("primitive_forward: leaf is not an operation");
}

}  // namespace ad
}  // namespace dmat
