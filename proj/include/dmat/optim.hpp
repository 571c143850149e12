// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <unordered_map>
#include <vector>

#include "dmat/autodiff.hpp"
#include "dmat/parameter.hpp"

namespace dmat::optim {

/// Annealing constants. lr_p = eta0 / (1 + alpha p)^beta and
/// lambda_p = 2 / (1 + exp(-gamma p)) - 1, with p the training progress in [0, 1].
struct Schedule {
  double eta0 = 0.002;
  double alpha = 10.0;
  double beta = 0.75;
  double gamma = 10.0;
  double momentum = 0.9;

  /// Throws ContractError on eta0 <= 0, negative alpha/beta/gamma, or
  /// momentum outside [0, 1).
  void validate() const;
};

double lr_at(const Schedule& s, double p);
double lambda_at(const Schedule& s, double p);

/// v <- momentum * v + grad; param <- param - lr * v.
void sgd_step(std::span<double> param, std::span<const double> grad, double lr, double momentum,
              std::vector<double>& velocity);

using GradMap = std::unordered_map<ParamId, std::vector<double>>;

/// Gradients of the listed parameters, keyed by parameter id.
GradMap gather(const ad::Gradients& grads, std::span<Parameter* const> params);

/// Momentum SGD with one velocity buffer per parameter id.
class Sgd {
 public:
  explicit Sgd(double momentum) : momentum_(momentum) {}

  /// Updates every listed parameter; a parameter with no entry in grads is
  /// a contract error.
  void step(std::span<Parameter* const> params, const GradMap& grads, double lr);
  double momentum() const { return momentum_; }
  const std::unordered_map<ParamId, std::vector<double>>& velocity() const { return velocity_; }

 private:
  double momentum_;
  std::unordered_map<ParamId, std::vector<double>> velocity_;
};

}  // namespace dmat::optim
