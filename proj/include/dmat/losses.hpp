// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <span>

#include "dmat/autodiff.hpp"
#include "dmat/nn.hpp"

namespace dmat::losses {

/// Mean over the batch of -log softmax(logits)[label].
ad::Var cross_entropy(ad::Var logits, std::span<const std::size_t> labels);

/// Mean over the batch of (1/K) sum_k |p1_k - p2_k| for row-wise
/// probability inputs; lies in [0, 1].
ad::Var discrepancy(ad::Var p1, ad::Var p2);

/// Terms of a per-module loss; total = classifier + domain_source + domain_target.
struct ModuleLoss {
  ad::Var total;
  ad::Var classifier;     // CE(Ca) + CE(Cb) on the source batch
  ad::Var domain_source;  // D cross-entropy on source, label 0
  ad::Var domain_target;  // D cross-entropy on target, label 1
};

/// Invariant-feature module: the discriminator sees T's output through a
/// gradient reversal layer of weight lambda.
ModuleLoss loss_m1(ad::Graph& graph, const Tensor& batch_s, std::span<const std::size_t> labels_s,
                   const Tensor& batch_t, const nn::ComponentSet& m1, double lambda);

/// Discriminative-feature module: identical composition without reversal.
ModuleLoss loss_m2(ad::Graph& graph, const Tensor& batch_s, std::span<const std::size_t> labels_s,
                   const Tensor& batch_t, const nn::ComponentSet& m2);

struct DualLoss {
  ad::Var total;  // grad_reverse(dis_t, lambda) + dis_c
  ad::Var dis_t;  // feature-distribution discrepancy between T1 and T2, source + target
  ad::Var dis_c;  // prediction discrepancy between C1 and C3, source + target
};

/// Cross-module min-max objective. T outputs are row-softmaxed before the
/// discrepancy; only the first classifier of each module (C1, C3) takes part.
DualLoss loss_dual(ad::Graph& graph, const Tensor& batch_s, const Tensor& batch_t,
                   const nn::ComponentSet& m1, const nn::ComponentSet& m2, double lambda);

}  // namespace dmat::losses
