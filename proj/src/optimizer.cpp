// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The cbtail Authors

#include "cbtail/optimizer.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "cbtail/errors.hpp"

namespace cbtail {

void optimizer_step(std::span<double> params, std::span<const double> grads, AdamWState& state,
                    double lr, const AdamWConfig& config) {
  if (params.size() != grads.size())
    throw ShapeMismatch("parameter/gradient sizes differ: " + std::to_string(params.size()) + " vs " +
                        std::to_string(grads.size()));
  if (state.first_moment.empty() && state.second_moment.empty()) {
    state.first_moment.assign(params.size(), 0.0);
    state.second_moment.assign(params.size(), 0.0);
  }
  if (state.first_moment.size() != params.size() || state.second_moment.size() != params.size())
    throw ShapeMismatch("optimizer state does not match the parameter tensor");

  ++state.step;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(config.beta1, t);
  const double correction2 = 1.0 - std::pow(config.beta2, t);
  const double decay = lr * config.weight_decay;

  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    double& m = state.first_moment[i];
    double& v = state.second_moment[i];
    m = config.beta1 * m + (1.0 - config.beta1) * g;
    v = config.beta2 * v + (1.0 - config.beta2) * g * g;
    const double m_hat = m / correction1;
    const double v_hat = v / correction2;
    params[i] -= decay * params[i];
    params[i] -= lr * m_hat / (std::sqrt(v_hat) + config.epsilon);
  }
}

double cosine_lr(int t, int total, double lr_max, double lr_min) {
  if (total < 1) throw InvalidSchedule("schedule length must be at least 1");
  if (t < 0 || t > total)
    throw InvalidSchedule("epoch " + std::to_string(t) + " outside [0, " + std::to_string(total) + "]");
  return lr_min + 0.5 * (lr_max - lr_min) * (1.0 + std::cos(std::numbers::pi * t / total));
}

}  // namespace cbtail
