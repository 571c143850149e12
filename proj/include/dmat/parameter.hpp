// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>

#include "dmat/tensor.hpp"

namespace dmat {

using ParamId = std::uint64_t;

/// A named learnable tensor. The id is unique per constructed parameter and
/// survives copies, so a copied model maps onto the same optimizer state.
struct Parameter {
  std::string name;
  Tensor value;
  ParamId id = 0;

  Parameter() = default;
  Parameter(std::string name, Tensor value);
};

}  // namespace dmat
