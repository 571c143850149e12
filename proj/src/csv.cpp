// SPDX-License-Identifier: Apache-2.0
#include "dmat/csv.hpp"

#include <charconv>
#include <cmath>

namespace dmat {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, end);
}

}  // namespace dmat
