// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The cbtail Authors

#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace cbtail {

struct AdamWConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 0.01;
};

/// Moment accumulators for one parameter tensor.
struct AdamWState {
  std::vector<double> first_moment;
  std::vector<double> second_moment;
  std::int64_t step = 0;
};

/// One AdamW update:
///   p <- p - lr * weight_decay * p
///   m <- b1 m + (1 - b1) g,  v <- b2 v + (1 - b2) g^2
///   p <- p - lr * m_hat / (sqrt(v_hat) + eps)
/// State is lazily sized on the first call. Throws ShapeMismatch.
void optimizer_step(std::span<double> params, std::span<const double> grads, AdamWState& state,
                    double lr, const AdamWConfig& config);

/// lr_min + (lr_max - lr_min) * (1 + cos(pi t / T)) / 2. Throws InvalidSchedule
/// unless 0 <= t <= T and T >= 1.
double cosine_lr(int t, int total, double lr_max, double lr_min);

}  // namespace cbtail
