// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace dmat {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Operand shapes do not conform to an operation.
struct DimensionError : Error {
  using Error::Error;
};

/// Input lies outside the mathematical domain of an operation.
struct DomainError : Error {
  using Error::Error;
};

/// A precondition of a public entry point was violated.
struct ContractError : Error {
  using Error::Error;
};

/// Malformed bytes in a binary file.
struct FormatError : Error {
  using Error::Error;
};

/// Two inputs that must agree do not.
struct ConsistencyError : Error {
  using Error::Error;
};

/// Bad key, value, or missing entry in a run configuration.
struct ConfigError : Error {
  using Error::Error;
};

}  // namespace dmat
