// SPDX-License-Identifier: Apache-2.0
#include "dmat/losses.hpp"

#include <optional>
#include <string>
#include <vector>

#include "dmat/errors.hpp"
#include "dmat/model.hpp"

namespace dmat::losses {

ad::Var cross_entropy(ad::Var logits, std::span<const std::size_t> labels) {
  const Shape& s = logits.shape();
  if (s.size() != 2) throw DimensionError("cross_entropy: logits must be 2-D, got " + to_string(s));
  if (s[0] == 0) throw ContractError("cross_entropy: empty batch");
  if (labels.size() != s[0])
    throw DimensionError("cross_entropy: " + std::to_string(labels.size()) + " labels for logits " +
                         to_string(s));
  for (std::size_t y : labels)
    if (y >= s[1])
      throw ContractError("cross_entropy: label " + std::to_string(y) + " outside [0, " +
                          std::to_string(s[1]) + ")");
  ad::Var picked = ad::pick(ad::log_softmax(logits), {labels.begin(), labels.end()});
  return ad::scalar_mul(ad::mean(picked), -1.0);
}

ad::Var discrepancy(ad::Var p1, ad::Var p2) {
  if (p1.shape() != p2.shape())
    throw DimensionError("discrepancy: shapes " + to_string(p1.shape()) + " and " +
                         to_string(p2.shape()) + " differ");
  return ad::mean(ad::abs(ad::sub(p1, p2)));
}

namespace {

void require_batches(const char* op, const Tensor& s, std::span<const std::size_t> labels,
                     const Tensor& t) {
  if (s.rank() != 2 || t.rank() != 2 || s.shape[0] == 0 || t.shape[0] == 0)
    throw ContractError(std::string(op) + ": source and target batches must be non-empty matrices");
  if (labels.size() != s.shape[0])
    throw ContractError(std::string(op) + ": label count does not match source batch");
}

ModuleLoss module_loss(ad::Graph& graph, const Tensor& batch_s,
                       std::span<const std::size_t> labels_s, const Tensor& batch_t,
                       const nn::ComponentSet& set, std::optional<double> reversal) {
  const auto src = model::forward_path(graph, set, graph.constant(batch_s), reversal);
  const auto tgt = model::forward_path(graph, set, graph.constant(batch_t), reversal);
  const std::vector<std::size_t> zeros(batch_s.shape[0], 0);
  const std::vector<std::size_t> ones(batch_t.shape[0], 1);

  ModuleLoss out;
  out.classifier = ad::add(cross_entropy(src.ca_logits, labels_s),
                           cross_entropy(src.cb_logits, labels_s));
  out.domain_source = cross_entropy(src.d_logits, zeros);
  out.domain_target = cross_entropy(tgt.d_logits, ones);
  out.total = ad::add(ad::add(out.classifier, out.domain_source), out.domain_target);
  return out;
}

}  // namespace

ModuleLoss loss_m1(ad::Graph& graph, const Tensor& batch_s, std::span<const std::size_t> labels_s,
                   const Tensor& batch_t, const nn::ComponentSet& m1, double lambda) {
  require_batches("loss_m1", batch_s, labels_s, batch_t);
  if (!(lambda >= 0.0)) throw ContractError("loss_m1: lambda must be >= 0");
  return module_loss(graph, batch_s, labels_s, batch_t, m1, lambda);
}

ModuleLoss loss_m2(ad::Graph& graph, const Tensor& batch_s, std::span<const std::size_t> labels_s,
                   const Tensor& batch_t, const nn::ComponentSet& m2) {
  require_batches("loss_m2", batch_s, labels_s, batch_t);
  return module_loss(graph, batch_s, labels_s, batch_t, m2, std::nullopt);
}

DualLoss loss_dual(ad::Graph& graph, const Tensor& batch_s, const Tensor& batch_t,
                   const nn::ComponentSet& m1, const nn::ComponentSet& m2, double lambda) {
  if (batch_s.rank() != 2 || batch_t.rank() != 2 || batch_s.shape[0] == 0 || batch_t.shape[0] == 0)
    throw ContractError("loss_dual: source and target batches must be non-empty matrices");

  const ad::Var xs = graph.constant(batch_s);
  const ad::Var xt = graph.constant(batch_t);
  const auto m1s = model::forward_path(graph, m1, xs);
  const auto m1t = model::forward_path(graph, m1, xt);
  const auto m2s = model::forward_path(graph, m2, xs);
  const auto m2t = model::forward_path(graph, m2, xt);

  DualLoss out;
  out.dis_t = ad::add(discrepancy(ad::softmax(m1s.t_out), ad::softmax(m2s.t_out)),
                      discrepancy(ad::softmax(m1t.t_out), ad::softmax(m2t.t_out)));
  out.dis_c = ad::add(discrepancy(m1s.ca_probs, m2s.ca_probs),
                      discrepancy(m1t.ca_probs, m2t.ca_probs));
  out.total = ad::add(ad::grad_reverse(out.dis_t, lambda), out.dis_c);
  return out;
}

}  // namespace dmat::losses
