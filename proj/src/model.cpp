// SPDX-License-Identifier: Apache-2.0
#include "dmat/model.hpp"

#include "dmat/errors.hpp"
#include "dmat/rng.hpp"

namespace dmat::model {

std::string_view variant_name(Variant v) {
  switch (v) {
    case Variant::kSourceOnly: return "source_only";
    case Variant::kDann: return "dann";
    case Variant::kMcd: return "mcd";
    case Variant::kMcdDann: return "mcd_dann";
    case Variant::kOurs: return "ours";
    case Variant::kOurs1M: return "ours_1m";
    case Variant::kOurs2M: return "ours_2m";
  }
  return "?";
}

std::optional<Variant> parse_variant(std::string_view name) {
  for (Variant v : kAllVariants)
    if (variant_name(v) == name) return v;
  return std::nullopt;
}

std::size_t StepPlan::updates_per_batch(std::size_t k) const {
  std::size_t n = 0;
  if (source_only) ++n;
  // Phase A, phase B, then k phase-C updates.
  if (step1_m1) n += 2 + k;
  if (step1_m2) n += 2 + k;
  if (step2_m1 || step2_m2) ++n;
  if (step3) ++n;
  return n;
}

StepPlan variant_plan(Variant v) {
  StepPlan p;
  switch (v) {
    case Variant::kSourceOnly:
      p.source_only = true;
      break;
    case Variant::kDann:
      p.step2_m1 = true;
      break;
    case Variant::kMcd:
      p.step1_m1 = true;
      break;
    case Variant::kMcdDann:
      p.step1_m1 = p.step2_m1 = true;
      break;
    case Variant::kOurs:
      p.step2_m1 = p.step2_m2 = p.step3 = true;
      break;
    case Variant::kOurs1M:
      p.step1_m1 = p.step2_m1 = p.step2_m2 = p.step3 = true;
      break;
    case Variant::kOurs2M:
      p.step1_m1 = p.step1_m2 = p.step2_m1 = p.step2_m2 = p.step3 = true;
      break;
  }
  return p;
}

std::set<std::string> updated_components(const StepPlan& plan) {
  std::set<std::string> out;
  auto add = [&](const char* module, std::initializer_list<const char*> parts) {
    for (const char* part : parts) out.insert(std::string(module) + "." + part);
  };
  if (plan.source_only) add("m1", {"G", "T", "Ca", "Cb"});
  if (plan.step1_m1) add("m1", {"G", "T", "Ca", "Cb"});
  if (plan.step1_m2) add("m2", {"G", "T", "Ca", "Cb"});
  if (plan.step2_m1) add("m1", {"G", "T", "D", "Ca", "Cb"});
  if (plan.step2_m2) add("m2", {"G", "T", "D", "Ca", "Cb"});
  if (plan.step3) {
    add("m1", {"G", "T", "Ca"});
    add("m2", {"G", "T", "Ca"});
  }
  return out;
}

std::vector<Parameter*> DualModel::parameters() {
  auto out = m1.parameters();
  auto more = m2.parameters();
  out.insert(out.end(), more.begin(), more.end());
  return out;
}

std::vector<const Parameter*> DualModel::parameters() const {
  auto out = m1.parameters();
  auto more = m2.parameters();
  out.insert(out.end(), more.begin(), more.end());
  return out;
}

DualModel build_dual_model(const nn::Architecture& arch, std::uint64_t seed) {
  return DualModel{arch, nn::build_component_set(arch, derive_seed(seed, 101), "m1"),
                   nn::build_component_set(arch, derive_seed(seed, 102), "m2")};
}

PathOutputs forward_path(ad::Graph& graph, const nn::ComponentSet& set, ad::Var x,
                         std::optional<double> d_reversal) {
  PathOutputs out;
  out.features = nn::forward_stack(graph, set.G, x);
  out.t_out = nn::forward_stack(graph, set.T, out.features);
  out.ca_logits = nn::forward_stack(graph, set.Ca, out.t_out);
  out.cb_logits = nn::forward_stack(graph, set.Cb, out.t_out);
  out.ca_probs = ad::softmax(out.ca_logits);
  out.cb_probs = ad::softmax(out.cb_logits);
  ad::Var d_in = d_reversal ? ad::grad_reverse(out.t_out, *d_reversal) : out.t_out;
  out.d_logits = nn::forward_stack(graph, set.D, d_in);
  return out;
}

Tensor predict_proba(const DualModel& model, const Tensor& x) {
  ad::Graph graph;
  ad::Var h = graph.constant(x);
  h = nn::forward_stack(graph, model.m1.G, h);
  h = nn::forward_stack(graph, model.m1.T, h);
  h = nn::forward_stack(graph, model.m1.Ca, h);
  return ad::softmax(h).value();
}

std::vector<std::size_t> predict(const DualModel& model, const Tensor& x) {
  const Tensor probs = predict_proba(model, x);
  std::vector<std::size_t> out(probs.rows());
  for (std::size_t i = 0; i < probs.rows(); ++i) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < probs.cols(); ++j)
      if (probs.at(i, j) > probs.at(i, best)) best = j;
    out[i] = best;
  }
  return out;
}

}  // namespace dmat::model
