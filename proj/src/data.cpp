// SPDX-License-Identifier: Apache-2.0
#include "dmat/data.hpp"

#include <bit>
#include <cmath>
#include <fstream>
#include <numbers>
#include <string>

#include "dmat/csv.hpp"
#include "dmat/errors.hpp"
#include "dmat/rng.hpp"

namespace dmat::data {

void DomainDataset::validate() const {
  if (features.rank() != 2 || features.shape[0] == 0)
    throw ContractError("dataset: need at least one sample in a 2-D feature matrix");
  if (labels) {
    if (labels->size() != size())
      throw ContractError("dataset: " + std::to_string(labels->size()) + " labels for " +
                          std::to_string(size()) + " samples");
    for (std::size_t y : *labels)
      if (y >= num_classes)
        throw ContractError("dataset: label " + std::to_string(y) + " outside [0, " +
                            std::to_string(num_classes) + ")");
  }
}

DomainDataset gen_two_moons(std::size_t n, double noise_sigma, std::uint64_t seed) {
  if (n < 2) throw ContractError("gen_two_moons: n must be >= 2");
  if (!(noise_sigma >= 0.0)) throw ContractError("gen_two_moons: noise_sigma must be >= 0");
  const std::size_t n0 = (n + 1) / 2;
  const std::size_t n1 = n / 2;
  auto angle = [](std::size_t j, std::size_t count) {
    return count > 1 ? std::numbers::pi * static_cast<double>(j) / static_cast<double>(count - 1)
                     : 0.0;
  };

  Rng rng(seed);
  DomainDataset ds{Tensor::zeros({n, 2}), Labels(n), Domain::kSource, 2};
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = i / 2;
    double x, y;
    if (i % 2 == 0) {
      const double t = angle(j, n0);
      x = std::cos(t);
      y = std::sin(t);
    } else {
      const double t = angle(j, n1);
      x = 1.0 - std::cos(t);
      y = 0.5 - std::sin(t);
    }
    if (noise_sigma > 0.0) {
      x += noise_sigma * rng.normal();
      y += noise_sigma * rng.normal();
    }
    ds.features.at(i, 0) = x;
    ds.features.at(i, 1) = y;
    (*ds.labels)[i] = i % 2;
  }
  return ds;
}

DomainDataset domain_shift(const DomainDataset& ds, double theta_degrees,
                           std::array<double, 2> translate) {
  if (ds.input_dim() != 2)
    throw ContractError("domain_shift: needs 2-D features, got " + to_string(ds.features.shape));
  const std::size_t n = ds.size();
  double cx = 0.0, cy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    cx += ds.features.at(i, 0);
    cy += ds.features.at(i, 1);
  }
  cx /= static_cast<double>(n);
  cy /= static_cast<double>(n);

  const double theta = theta_degrees * std::numbers::pi / 180.0;
  const double c = std::cos(theta), s = std::sin(theta);
  DomainDataset out = ds;
  out.domain = Domain::kTarget;
  if (theta_degrees == 0.0 && translate[0] == 0.0 && translate[1] == 0.0) return out;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = ds.features.at(i, 0) - cx;
    const double dy = ds.features.at(i, 1) - cy;
    out.features.at(i, 0) = cx + c * dx - s * dy + translate[0];
    out.features.at(i, 1) = cy + s * dx + c * dy + translate[1];
  }
  return out;
}

std::pair<DomainDataset, DomainDataset> gen_blob_shift(std::size_t n, std::size_t num_classes,
                                                       double separation,
                                                       std::array<double, 2> shift,
                                                       std::uint64_t seed, double sigma) {
  if (num_classes < 2) throw ContractError("gen_blob_shift: need K >= 2");
  if (n == 0) throw ContractError("gen_blob_shift: n must be >= 1");
  const double radius = separation / (2.0 * std::sin(std::numbers::pi / static_cast<double>(num_classes)));
  Rng rng(seed);
  DomainDataset src{Tensor::zeros({n, 2}), Labels(n), Domain::kSource, num_classes};
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t k = i % num_classes;
    const double a = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(num_classes);
    src.features.at(i, 0) = radius * std::cos(a) + sigma * rng.normal();
    src.features.at(i, 1) = radius * std::sin(a) + sigma * rng.normal();
    (*src.labels)[i] = k;
  }
  DomainDataset tgt = src;
  tgt.domain = Domain::kTarget;
  for (std::size_t i = 0; i < n; ++i) {
    tgt.features.at(i, 0) += shift[0];
    tgt.features.at(i, 1) += shift[1];
  }
  return {std::move(src), std::move(tgt)};
}

std::vector<BatchPair> batches(const DomainDataset& source, const Tensor& target_features,
                               std::size_t batch_size, std::uint64_t epoch_seed) {
  if (batch_size == 0) throw ContractError("batches: batch_size must be >= 1");
  if (!source.labels) throw ContractError("batches: source domain must be labelled");
  const std::size_t ns = source.size();
  const std::size_t nt = target_features.rank() == 2 ? target_features.shape[0] : 0;
  if (batch_size > ns || batch_size > nt)
    throw ContractError("batches: batch_size " + std::to_string(batch_size) +
                        " exceeds domain size (source " + std::to_string(ns) + ", target " +
                        std::to_string(nt) + ")");

  Rng rs(derive_seed(epoch_seed, 1));
  Rng rt(derive_seed(epoch_seed, 2));
  const auto ps = rs.permutation(ns);
  const auto pt = rt.permutation(nt);
  const std::size_t count = std::min(ns, nt) / batch_size;

  std::vector<BatchPair> out;
  out.reserve(count);
  for (std::size_t b = 0; b < count; ++b) {
    BatchPair pair;
    pair.source_index.assign(ps.begin() + static_cast<std::ptrdiff_t>(b * batch_size),
                             ps.begin() + static_cast<std::ptrdiff_t>((b + 1) * batch_size));
    pair.target_index.assign(pt.begin() + static_cast<std::ptrdiff_t>(b * batch_size),
                             pt.begin() + static_cast<std::ptrdiff_t>((b + 1) * batch_size));
    pair.source = source.features.gather_rows(pair.source_index);
    pair.target = target_features.gather_rows(pair.target_index);
    for (std::size_t i : pair.source_index) pair.source_labels.push_back((*source.labels)[i]);
    out.push_back(std::move(pair));
  }
  return out;
}

std::uint64_t checksum(const DomainDataset& ds) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
      h ^= (v >> (8 * i)) & 0xff;
      h *= 0x100000001b3ULL;
    }
  };
  for (std::size_t d : ds.features.shape) mix(d);
  for (double v : ds.features.data) mix(std::bit_cast<std::uint64_t>(v));
  if (ds.labels)
    for (std::size_t y : *ds.labels) mix(y);
  return h;
}

void write_csv(const std::filesystem::path& path, std::span<const DomainDataset* const> sets) {
  if (sets.empty()) throw ContractError("write_csv: nothing to write");
  const std::size_t d = sets.front()->input_dim();
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error("cannot open " + path.string() + " for writing");
  for (std::size_t j = 0; j < d; ++j) f << 'f' << j << ',';
  f << "label,domain\n";
  for (const DomainDataset* ds : sets) {
    if (ds->input_dim() != d) throw ConsistencyError("write_csv: datasets differ in input_dim");
    const char* tag = ds->domain == Domain::kSource ? "source" : "target";
    for (std::size_t i = 0; i < ds->size(); ++i) {
      for (std::size_t j = 0; j < d; ++j) f << format_double(ds->features.at(i, j)) << ',';
      if (ds->labels) f << (*ds->labels)[i];
      f << ',' << tag << '\n';
    }
  }
}

}  // namespace dmat::data
