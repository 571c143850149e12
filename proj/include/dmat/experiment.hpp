// SPDX-License-Identifier: Apache-2.0
//
// Multi-trial runs and the ablation matrix. Output layout of one run:
//
//   run_<i>.csv          per-epoch metrics of trial i (seed = config seed + i)
//   checkpoint_<i>.bin   final parameters of trial i
//   runs.csv             seed, dataset checksums and final accuracies per trial
//   summary.csv          mean and sample std of the final target accuracy
//   PARTIAL              written only when a trial fails
#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "dmat/config.hpp"

namespace dmat::experiment {

inline constexpr const char* kMetricsHeader =
    "epoch,cls_ce,dom_ce_m1,dom_ce_m2,dis_t,dis_c,mcd_dis,src_acc,tgt_acc";

struct TrialResult {
  std::uint64_t seed = 0;
  std::uint64_t source_checksum = 0;
  std::uint64_t target_checksum = 0;
  double final_src_acc = 0.0;
  double final_tgt_acc = train::kNotRecorded;
};

struct Summary {
  std::vector<TrialResult> trials;
  double mean_tgt_acc = train::kNotRecorded;
  double std_tgt_acc = train::kNotRecorded;
};

/// Mean and sample (n - 1) standard deviation; std is 0 for one value. NaN
/// entries are skipped; with none left both are NaN.
std::pair<double, double> mean_std(const std::vector<double>& values);

/// Metrics CSV body; NaN fields are left empty.
std::string metrics_csv(const std::vector<train::MetricsRecord>& records);

/// Runs every trial of config and writes the files listed above into
/// config.out. On failure PARTIAL is written and the error is rethrown.
Summary run_experiment(const config::RunConfig& config);

struct AblationRow {
  model::Variant variant;
  std::vector<double> mean;  // one per dataset config
  std::vector<double> std;
  std::optional<double> avg;  // present with two or more dataset configs
};

/// All seven variants on every config (same seeds, same data draws). Runs
/// go to <out>/<name>/<variant>/ and the table to <out>/ablation.csv.
std::vector<AblationRow> ablation_matrix(const std::vector<config::RunConfig>& configs,
                                         const std::filesystem::path& out);

}  // namespace dmat::experiment
