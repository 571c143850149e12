// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>

#include "dmat/data.hpp"
#include "dmat/model.hpp"

namespace dmat::embedding {

struct Projection {
  Tensor points;         // [2n, 2]: source rows first, then target rows
  Tensor axes;           // [2, feature_dim], unit principal directions
  double variance[2]{};  // eigenvalues, descending
};

/// PCA of the T1 outputs of the first n_per_domain samples of each domain.
/// Each axis is oriented so its largest-magnitude loading is positive.
Projection project(const model::DualModel& model, const data::DomainDataset& source,
                   const data::DomainDataset& target, std::size_t n_per_domain);

/// Writes project() as CSV with columns x,y,domain,label.
void export_embeddings(const model::DualModel& model, const data::DomainDataset& source,
                       const data::DomainDataset& target, std::size_t n_per_domain,
                       const std::filesystem::path& out_path);

}  // namespace dmat::embedding
