// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "dmat/tensor.hpp"

namespace dmat::data {

enum class Domain : std::uint8_t { kSource, kTarget };
using Labels = std::vector<std::size_t>;

struct DomainDataset {
  Tensor features;               // [n, input_dim]
  std::optional<Labels> labels;  // length n, values in [0, num_classes)
  Domain domain = Domain::kSource;
  std::size_t num_classes = 0;

  std::size_t size() const { return features.shape.empty() ? 0 : features.shape[0]; }
  std::size_t input_dim() const { return features.shape.size() == 2 ? features.shape[1] : 0; }
  /// Throws ContractError if n == 0 or labels are inconsistent.
  void validate() const;
};

/// Two interleaving half circles; even indices are class 0 on the upper unit
/// arc, odd indices class 1 on the shifted lower arc. Gaussian noise of
/// standard deviation noise_sigma is added to both coordinates.
DomainDataset gen_two_moons(std::size_t n, double noise_sigma, std::uint64_t seed);

/// Rotates 2-D features by theta about their centroid, then translates.
/// The result is tagged as target; labels and class count are kept.
DomainDataset domain_shift(const DomainDataset& ds, double theta_degrees,
                           std::array<double, 2> translate);

/// K isotropic Gaussian clusters (std sigma) whose means sit on a ring with
/// neighbouring means `separation` apart. The target is the same draw
/// translated by shift.
std::pair<DomainDataset, DomainDataset> gen_blob_shift(std::size_t n, std::size_t num_classes,
                                                       double separation,
                                                       std::array<double, 2> shift,
                                                       std::uint64_t seed, double sigma = 1.0);

/// Reads IDX unsigned-byte files: images (magic 0x00000803, n x rows x cols)
/// and optionally labels (magic 0x00000801, n). Pixels are scaled by 1/255
/// and each image flattened row-major.
DomainDataset load_idx(const std::filesystem::path& images,
                       const std::optional<std::filesystem::path>& labels = std::nullopt,
                       std::size_t num_classes = 10, Domain domain = Domain::kSource);

void write_idx_images(const std::filesystem::path& path, std::span<const std::uint8_t> pixels,
                      std::uint32_t count, std::uint32_t rows, std::uint32_t cols);
void write_idx_labels(const std::filesystem::path& path, std::span<const std::uint8_t> labels);

struct BatchPair {
  Tensor source;
  Labels source_labels;
  Tensor target;
  std::vector<std::size_t> source_index;
  std::vector<std::size_t> target_index;
};

/// Shuffles each domain with its own permutation derived from epoch_seed and
/// pairs consecutive slices; trailing partial batches are dropped. The
/// target side is features only.
std::vector<BatchPair> batches(const DomainDataset& source, const Tensor& target_features,
                               std::size_t batch_size, std::uint64_t epoch_seed);

/// FNV-1a over the feature bits, labels, and shape.
std::uint64_t checksum(const DomainDataset& ds);

/// CSV with header f0..f{d-1},label,domain; domain is "source"/"target" and
/// label is empty when absent.
void write_csv(const std::filesystem::path& path, std::span<const DomainDataset* const> sets);

}  // namespace dmat::data
