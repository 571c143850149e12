// SPDX-License-Identifier: Apache-2.0
//
// Run configuration files. One `key = value` per line, `#` to end of line is
// a comment, blank lines are ignored. `variant` and `dataset` are required;
// every other key has a default (see README for the full table).
#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "dmat/data.hpp"
#include "dmat/trainer.hpp"

namespace dmat::config {

enum class DatasetKind : std::uint8_t { kTwoMoons, kBlobs, kIdx };

std::string_view dataset_name(DatasetKind kind);

struct IdxPaths {
  std::filesystem::path source_images;
  std::filesystem::path source_labels;
  std::filesystem::path target_images;
  std::optional<std::filesystem::path> target_labels;
  std::size_t num_classes = 10;
};

struct RunConfig {
  train::TrainConfig train;
  DatasetKind dataset = DatasetKind::kTwoMoons;
  std::string name;  // label used by the ablation table; defaults to the dataset name

  // two_moons
  std::size_t n_source = 500;
  std::size_t n_target = 500;
  double noise = 0.1;
  double rotation = 40.0;  // degrees
  std::array<double, 2> translate{0.0, 0.0};

  // blobs
  std::size_t blob_classes = 3;
  double blob_separation = 4.0;
  double blob_sigma = 1.0;
  std::array<double, 2> blob_shift{2.0, 2.0};

  IdxPaths idx;

  std::size_t trials = 5;
  std::filesystem::path out = "out";
  std::size_t embed_per_domain = 1000;

  /// Throws ConfigError on any out-of-range field.
  void validate() const;
};

struct Datasets {
  data::DomainDataset source;
  data::DomainDataset target;  // carries labels when available, for evaluation only
};

/// Dataset draw for trial seed `seed`. Depends on the dataset fields and the
/// seed only, so every variant sees identical data for a given trial.
Datasets make_datasets(const RunConfig& config, std::uint64_t seed);

RunConfig parse_config_text(std::string_view text);
RunConfig parse_config(const std::filesystem::path& path);

}  // namespace dmat::config
