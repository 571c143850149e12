// SPDX-License-Identifier: Apache-2.0
//
// Central finite-difference checks of reverse-mode gradients. The oracle
// only ever evaluates graphs forward; it never calls Graph::backward.
#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "dmat/autodiff.hpp"
#include "dmat/parameter.hpp"

namespace dmat::gradcheck {

inline constexpr double kStep = 1e-5;
inline constexpr double kTolerance = 1e-4;
/// Gradients smaller than this are compared at this scale.
inline constexpr double kFloor = 1e-5;

using LossFn = std::function<ad::Var(ad::Graph&)>;

struct CaseResult {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
  /// Entries whose stencil crosses a relu/abs kink; the derivative is not
  /// defined there, so they are excluded.
  std::size_t skipped = 0;
};

double relative_error(double analytic, double numeric);

/// Compares backward() against central differences of the loss w.r.t.
/// every entry of every listed parameter. Parameter values are restored.
CaseResult check_case(const LossFn& loss, std::span<Parameter* const> params, double h = kStep);

struct SuiteEntry {
  std::string name;
  std::size_t cases = 0;
  std::size_t checked = 0;
  std::size_t skipped = 0;
  double max_rel_error = 0.0;
  bool passed(double tol = kTolerance) const { return cases > 0 && max_rel_error < tol; }
};

/// Randomised checks of every primitive op, every primitive composed with
/// grad_reverse, and every loss, `trials` cases each.
std::vector<SuiteEntry> run_suite(std::size_t trials, std::uint64_t seed);

}  // namespace dmat::gradcheck
