// SPDX-License-Identifier: Apache-2.0
#include "dmat/optim.hpp"

#include <cmath>
#include <string>

#include "dmat/errors.hpp"

namespace dmat::optim {

void Schedule::validate() const {
  if (!(eta0 > 0.0)) throw ContractError("schedule: eta0 must be > 0");
  if (!(alpha >= 0.0) || !(beta >= 0.0) || !(gamma >= 0.0))
    throw ContractError("schedule: alpha, beta and gamma must be >= 0");
  if (!(momentum >= 0.0 && momentum < 1.0))
    throw ContractError("schedule: momentum must lie in [0, 1)");
}

namespace {
void check_progress(const char* op, double p) {
  if (!(p >= 0.0 && p <= 1.0))
    throw ContractError(std::string(op) + ": progress " + std::to_string(p) + " outside [0, 1]");
}
}  // namespace

double lr_at(const Schedule& s, double p) {
  check_progress("lr_at", p);
  return s.eta0 / std::pow(1.0 + s.alpha * p, s.beta);
}

double lambda_at(const Schedule& s, double p) {
  check_progress("lambda_at", p);
  return 2.0 / (1.0 + std::exp(-s.gamma * p)) - 1.0;
}

void sgd_step(std::span<double> param, std::span<const double> grad, double lr, double momentum,
              std::vector<double>& velocity) {
  if (grad.size() != param.size())
    throw DimensionError("sgd_step: gradient has " + std::to_string(grad.size()) +
                         " entries for a parameter of " + std::to_string(param.size()));
  if (velocity.empty()) velocity.assign(param.size(), 0.0);
  for (std::size_t i = 0; i < param.size(); ++i) {
    velocity[i] = momentum * velocity[i] + grad[i];
    param[i] -= lr * velocity[i];
  }
}

GradMap gather(const ad::Gradients& grads, std::span<Parameter* const> params) {
  GradMap out;
  for (const Parameter* p : params) out.emplace(p->id, grads.of(*p));
  return out;
}

void Sgd::step(std::span<Parameter* const> params, const GradMap& grads, double lr) {
  // Validate everything first so a failed step leaves no parameter moved.
  for (Parameter* p : params)
    if (!grads.contains(p->id)) throw ContractError("sgd: no gradient for parameter " + p->name);
  for (Parameter* p : params) sgd_step(p->value.data, grads.at(p->id), lr, momentum_, velocity_[p->id]);
}

}  // namespace dmat::optim
