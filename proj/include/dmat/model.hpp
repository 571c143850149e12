// SPDX-License-Identifier: Apache-2.0
//
// The two-module network. M1 (invariant features) and M2 (discriminative
// features) share one architecture but never share parameters. Inference
// uses only G1 -> T1 -> C1.
#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "dmat/autodiff.hpp"
#include "dmat/nn.hpp"

namespace dmat::model {

enum class Variant : std::uint8_t { kSourceOnly, kDann, kMcd, kMcdDann, kOurs, kOurs1M, kOurs2M };

inline constexpr std::array<Variant, 7> kAllVariants = {
    Variant::kSourceOnly, Variant::kDann,   Variant::kMcd,   Variant::kMcdDann,
    Variant::kOurs,       Variant::kOurs1M, Variant::kOurs2M};

/// Stable lowercase names: "source_only", "dann", "mcd", "mcd_dann", "ours",
/// "ours_1m", "ours_2m".
std::string_view variant_name(Variant v);
/// Exact, case-sensitive match against variant_name.
std::optional<Variant> parse_variant(std::string_view name);

/// Which training steps a variant runs for each batch pair, in order.
struct StepPlan {
  bool source_only = false;  // plain classifier cross-entropy on M1
  bool step1_m1 = false;     // MCD boundary learning on M1
  bool step1_m2 = false;     // MCD boundary learning on M2
  bool step2_m1 = false;     // adversarial (reversed) domain loss on M1
  bool step2_m2 = false;     // separating domain loss on M2
  bool step3 = false;        // cross-module min-max

  bool uses_target() const { return step1_m1 || step1_m2 || step2_m1 || step2_m2 || step3; }
  bool uses_m2() const { return step1_m2 || step2_m2 || step3; }
  /// Optimizer updates issued per batch pair given k phase-C repeats.
  std::size_t updates_per_batch(std::size_t k) const;

  friend bool operator==(const StepPlan&, const StepPlan&) = default;
};

StepPlan variant_plan(Variant v);

/// Components a plan may change, keyed "m1.G", "m2.Cb", ...
std::set<std::string> updated_components(const StepPlan& plan);

struct DualModel {
  nn::Architecture arch;
  nn::ComponentSet m1;  // G1, T1, D1, C1 (Ca), C2 (Cb)
  nn::ComponentSet m2;  // G2, T2, D2, C3 (Ca), C4 (Cb)

  std::vector<Parameter*> parameters();
  std::vector<const Parameter*> parameters() const;
  nn::ComponentSet& module(int index) { return index == 1 ? m1 : m2; }
  const nn::ComponentSet& module(int index) const { return index == 1 ? m1 : m2; }
};

/// m1 and m2 receive distinct seeds derived from `seed`.
DualModel build_dual_model(const nn::Architecture& arch, std::uint64_t seed);

struct PathOutputs {
  ad::Var features;  // G(x)
  ad::Var t_out;     // T(G(x))
  ad::Var ca_probs;  // softmax(Ca(t_out))
  ad::Var cb_probs;  // softmax(Cb(t_out))
  ad::Var ca_logits;
  ad::Var cb_logits;
  ad::Var d_logits;  // D(t_out), or D(grad_reverse(t_out)) when reversal is set
};

/// G -> T -> {Ca, Cb, D}. With d_reversal set, a gradient reversal layer of
/// that weight sits between T and D.
PathOutputs forward_path(ad::Graph& graph, const nn::ComponentSet& set, ad::Var x,
                         std::optional<double> d_reversal = std::nullopt);

/// Class probabilities from G1 -> T1 -> C1, computed without touching any
/// other component.
Tensor predict_proba(const DualModel& model, const Tensor& x);
/// Argmax of predict_proba; ties resolve to the lowest class index.
std::vector<std::size_t> predict(const DualModel& model, const Tensor& x);

}  // namespace dmat::model
