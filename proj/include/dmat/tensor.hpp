// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace dmat {

using Shape = std::vector<std::size_t>;

std::size_t numel(const Shape& shape);
std::string to_string(const Shape& shape);

/// Dense row-major array of doubles. Zero-sized dimensions are representable
/// so that empty batches can reach (and be rejected by) the operations.
struct Tensor {
  Shape shape;
  std::vector<double> data;

  Tensor() = default;
  /// Throws DimensionError if data.size() != numel(shape).
  Tensor(Shape shape, std::vector<double> data);

  static Tensor zeros(Shape shape);
  static Tensor scalar(double v) { return Tensor({1}, {v}); }

  std::size_t size() const { return data.size(); }
  std::size_t rank() const { return shape.size(); }
  std::size_t rows() const;
  std::size_t cols() const;

  double& at(std::size_t r, std::size_t c) { return data[r * cols() + c]; }
  double at(std::size_t r, std::size_t c) const { return data[r * cols() + c]; }
  std::span<const double> row(std::size_t r) const {
    return {data.data() + r * cols(), cols()};
  }

  /// Rows selected by index, in the given order. Requires a 2-D tensor.
  Tensor gather_rows(std::span<const std::size_t> indices) const;

  friend bool operator==(const Tensor&, const Tensor&) = default;
};

}  // namespace dmat
