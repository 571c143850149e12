// SPDX-License-Identifier: Apache-2.0
//
// Training steps for the dual-module model and the loop that composes them
// per variant. For every batch pair the enabled steps run in order:
//
//   1. MCD boundary learning on M1 and/or M2 (three phases, k repeats of C)
//   2. per-module domain losses (reversed for M1, plain for M2)
//   3. cross-module min-max over T features and C1/C3 predictions
//
// Target labels never enter these functions; the loop only sees target
// features, and labelled target data is consulted solely by evaluate().
#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "dmat/data.hpp"
#include "dmat/model.hpp"
#include "dmat/optim.hpp"

namespace dmat::train {

inline constexpr double kNotRecorded = std::numeric_limits<double>::quiet_NaN();

struct TrainConfig {
  model::Variant variant = model::Variant::kOurs2M;
  std::size_t epochs = 60;
  std::size_t batch_size = 64;
  std::size_t k = 4;
  optim::Schedule schedule;
  std::uint64_t seed = 0;
  std::size_t eval_every = 1;
  /// input_dim and num_classes are overwritten from the data by train().
  nn::Architecture arch;

  void validate() const;
};

/// Epoch means of the per-batch losses; kNotRecorded where the producing
/// step is disabled (or, for tgt_acc, when no labelled target is given).
struct MetricsRecord {
  std::size_t epoch = 0;
  double cls_ce = kNotRecorded;     // M1 classifier cross-entropy (both heads)
  double dom_ce_m1 = kNotRecorded;  // D1 source + target cross-entropy
  double dom_ce_m2 = kNotRecorded;  // D2 source + target cross-entropy
  double dis_t = kNotRecorded;
  double dis_c = kNotRecorded;
  double mcd_dis = kNotRecorded;    // M1 target discrepancy entering phase C
  double src_acc = kNotRecorded;
  double tgt_acc = kNotRecorded;
};

struct McdTrace {
  double classifier_ce = 0.0;  // phase A objective
  double phase_b_dis = 0.0;    // discrepancy at the start of phase B
  double before = 0.0;         // discrepancy entering phase C
  double after = 0.0;          // discrepancy after k phase-C updates
};

/// One invocation of MCD on a module:
///   A. minimise CE(Ca) + CE(Cb) on source over G, T, Ca, Cb;
///   B. minimise source CE - dis(Ca, Cb) on target over Ca, Cb;
///   C. k times, minimise dis(Ca, Cb) on target over G, T.
McdTrace step1_mcd(nn::ComponentSet& set, optim::Sgd& opt, const Tensor& batch_s,
                   std::span<const std::size_t> labels_s, const Tensor& batch_t, std::size_t k,
                   double lr);

/// Classifier-only update of M1 on source data (G1, T1, C1, C2).
double source_only_step(nn::ComponentSet& m1, optim::Sgd& opt, const Tensor& batch_s,
                        std::span<const std::size_t> labels_s, double lr);

struct Step2Result {
  double m1_classifier = kNotRecorded;
  double m1_domain = kNotRecorded;
  double m1_total = kNotRecorded;
  double m2_classifier = kNotRecorded;
  double m2_domain = kNotRecorded;
  double m2_total = kNotRecorded;
};

/// One update of M1 on loss_m1 and, when the plan includes it, one update
/// of M2 on loss_m2. Both gradients come from the pre-step parameters.
Step2Result step2_modules(model::DualModel& model, optim::Sgd& opt, const Tensor& batch_s,
                          std::span<const std::size_t> labels_s, const Tensor& batch_t,
                          double lambda, double lr, const model::StepPlan& plan);

struct Step3Result {
  double dis_t = 0.0;
  double dis_c = 0.0;
};

/// One update of {G1, T1, C1, G2, T2, C3} on loss_dual.
Step3Result step3_dual(model::DualModel& model, optim::Sgd& opt, const Tensor& batch_s,
                       const Tensor& batch_t, double lambda, double lr);

/// Fraction of samples whose predicted class equals the label.
double evaluate(const model::DualModel& model, const data::DomainDataset& ds);

struct ProgressEvent {
  std::size_t update = 0;  // index of the first update of the step
  std::size_t total_updates = 0;
  double progress = 0.0;
  double lr = 0.0;
  double lambda = 0.0;
};

struct TrainOptions {
  /// Labelled target set used only to report target accuracy.
  const data::DomainDataset* target_eval = nullptr;
  std::function<void(const ProgressEvent&)> on_step;
  std::function<void(std::size_t epoch, const model::DualModel&)> on_epoch_end;
};

struct TrainResult {
  model::DualModel model;
  std::vector<MetricsRecord> metrics;
  std::size_t total_updates = 0;
};

/// Training progress of update u out of total: u / (total - 1), so the final
/// update runs at exactly 1.
double progress_at(std::size_t update, std::size_t total);

/// Full deterministic training run.
TrainResult train(const TrainConfig& config, const data::DomainDataset& source,
                  const Tensor& target_features, const TrainOptions& options = {});

}  // namespace dmat::train
