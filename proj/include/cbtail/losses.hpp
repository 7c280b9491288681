// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The cbtail Authors

#pragma once

#include <span>
#include <vector>

#include <Eigen/Core>

#include "cbtail/sampling.hpp"

namespace cbtail {

/// Probabilities are clamped to [kProbabilityFloor, 1] before taking the log.
inline constexpr double kProbabilityFloor = 1e-12;

struct LossConfig {
  double beta = 0.9999;
  double gamma = 2.0;
  double lambda = 0.5;

  /// Plain cross entropy: gamma = 0, lambda = 0 (pair with unit weights).
  static LossConfig cross_entropy() { return {0.0, 0.0, 0.0}; }
  void validate() const;
};

struct ClassWeights {
  std::vector<double> alpha;
  std::vector<double> effective_numbers;

  int num_classes() const { return static_cast<int>(alpha.size()); }
  static ClassWeights uniform(int num_classes);
};

/// E_j = (1 - beta^n_j) / (1 - beta), alpha_j = 1 / E_j.
/// With `renormalize`, alpha is rescaled to sum to C (off by default).
ClassWeights effective_number_weights(const ClassCounts& counts, double beta,
                                      bool renormalize = false);

/// -alpha_y * ln(p_y)
double cb_cross_entropy(std::span<const double> p, int y, const ClassWeights& weights);
/// (1 - p_y)^gamma * cb_cross_entropy
double focal_loss(std::span<const double> p, int y, const ClassWeights& weights, double gamma);
/// (1 - lambda) * CE + lambda * focal
double hybrid_loss(std::span<const double> p, int y, const LossConfig& config,
                   const ClassWeights& weights);

/// Gradient of hybrid_loss(softmax(logits), y) with respect to the logits.
Eigen::VectorXd hybrid_loss_grad(const Eigen::VectorXd& logits, int y, const LossConfig& config,
                                 const ClassWeights& weights);

/// Numerically stable softmax (max subtraction).
Eigen::VectorXd softmax(const Eigen::VectorXd& logits);

}  // namespace cbtail
