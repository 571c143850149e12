// SPDX-License-Identifier: Apache-2.0
#include "dmat/tensor.hpp"

#include <algorithm>
#include <functional>
#include <numeric>

#include "dmat/errors.hpp"

namespace dmat {

std::size_t numel(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

std::string to_string(const Shape& shape) {
  std::string out = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out += ", ";
    out += std::to_string(shape[i]);
  }
  return out + "]";
}

Tensor::Tensor(Shape s, std::vector<double> d) : shape(std::move(s)), data(std::move(d)) {
  if (shape.empty()) throw DimensionError("tensor: shape must have at least one dimension");
  if (data.size() != numel(shape)) {
    throw DimensionError("tensor: shape " + to_string(shape) + " needs " +
                         std::to_string(numel(shape)) + " values, got " +
                         std::to_string(data.size()));
  }
}

Tensor Tensor::zeros(Shape shape) {
  const std::size_t n = numel(shape);
  return Tensor(std::move(shape), std::vector<double>(n, 0.0));
}

std::size_t Tensor::rows() const { return shape.size() == 2 ? shape[0] : 1; }

std::size_t Tensor::cols() const { return shape.back(); }

Tensor Tensor::gather_rows(std::span<const std::size_t> indices) const {
  if (rank() != 2) throw DimensionError("gather_rows: expected 2-D tensor, got " + to_string(shape));
  const std::size_t c = cols();
  Tensor out = zeros({indices.size(), c});
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= shape[0]) throw ContractError("gather_rows: row index out of range");
    std::copy_n(data.begin() + static_cast<std::ptrdiff_t>(indices[i] * c), c,
                out.data.begin() + static_cast<std::ptrdiff_t>(i * c));
  }
  return out;
}

}  // namespace dmat
