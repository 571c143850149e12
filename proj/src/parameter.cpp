// SPDX-License-Identifier: Apache-2.0
#include "dmat/parameter.hpp"

#include <atomic>

namespace dmat {

namespace {
std::atomic<ParamId> next_param_id{1};
}  // namespace

Parameter::Parameter(std::string n, Tensor v)
    : name(std::move(n)), value(std::move(v)), id(next_param_id.fetch_add(1)) {}

}  // namespace dmat
