// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>

namespace dmat {

/// Shortest round-trip decimal form; independent of the global locale.
std::string format_double(double v);

}  // namespace dmat
