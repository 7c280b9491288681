// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The cbtail Authors

#include "cbtail/losses.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "cbtail/errors.hpp"

namespace cbtail {

namespace {

void check_index(std::span<const double> p, int y, const ClassWeights& weights) {
  if (y < 0 || y >= static_cast<int>(p.size()) || y >= weights.num_classes())
    throw IndexOutOfRange("class index " + std::to_string(y) + " outside [0, " +
                          std::to_string(std::min<std::size_t>(p.size(), weights.alpha.size())) + ")");
}

double clamped_log(double p) { return std::log(std::clamp(p, kProbabilityFloor, 1.0)); }

}  // namespace

void LossConfig::validate() const {
  if (!(beta >= 0.0 && beta < 1.0)) throw InvalidArgument("beta must lie in [0, 1)");
  if (!(gamma >= 0.0)) throw InvalidArgument("gamma must be nonnegative");
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw InvalidArgument("lambda must lie in [0, 1]");
}

ClassWeights ClassWeights::uniform(int num_classes) {
  return {std::vector<double>(num_classes, 1.0), std::vector<double>(num_classes, 1.0)};
}

ClassWeights effective_number_weights(const ClassCounts& counts, double beta, bool renormalize) {
  if (!(beta >= 0.0 && beta < 1.0)) throw InvalidArgument("beta must lie in [0, 1)");
  const int c = counts.num_classes();
  ClassWeights w{std::vector<double>(c), std::vector<double>(c)};
  const double one_minus_beta = 1.0 - beta;
  // 1 - beta^n = -expm1(n log beta); log(0) = -inf gives exactly 1 for beta = 0.
  const double log_beta = std::log(beta);
  for (int j = 0; j < c; ++j) {
    const double one_minus_pow = -std::expm1(static_cast<double>(counts[j]) * log_beta);
    w.effective_numbers[j] = one_minus_pow / one_minus_beta;
    w.alpha[j] = one_minus_beta / one_minus_pow;
  }
  if (renormalize) {
    const double sum = std::accumulate(w.alpha.begin(), w.alpha.end(), 0.0);
    for (double& a : w.alpha) a *= c / sum;
  }
  return w;
}

double cb_cross_entropy(std::span<const double> p, int y, const ClassWeights& weights) {
  check_index(p, y, weights);
  return -weights.alpha[y] * clamped_log(p[y]);
}

double focal_loss(std::span<const double> p, int y, const ClassWeights& weights, double gamma) {
  const double ce = cb_cross_entropy(p, y, weights);
  return std::pow(1.0 - p[y], gamma) * ce;
}

double hybrid_loss(std::span<const double> p, int y, const LossConfig& config, const ClassWeights& weights) {
  const double ce = cb_cross_entropy(p, y, weights);
  const double focal = std::pow(1.0 - p[y], config.gamma) * ce;
  return (1.0 - config.lambda) * ce + config.lambda * focal;
}

Eigen::VectorXd softmax(const Eigen::VectorXd& logits) {
  Eigen::VectorXd e = (logits.array() - logits.maxCoeff()).exp();
  return e / e.sum();
}

Eigen::VectorXd hybrid_loss_grad(const Eigen::VectorXd& logits, int y, const LossConfig& config,
                                 const ClassWeights& weights) {
  if (y < 0 || y >= logits.size() || y >= weights.num_classes())
    throw IndexOutOfRange("class index " + std::to_string(y) + " outside [0, " +
                          std::to_string(logits.size()) + ")");
  const Eigen::VectorXd p = softmax(logits);
  const double p_y = p[y];
  // 1 - p_y as the sum of the other classes keeps precision near saturation.
  double q = 0.0;
  for (Eigen::Index k = 0; k < p.size(); ++k)
    if (k != y) q += p[k];
  const double shifted = logits[y] - logits.maxCoeff();
  const double log_p = shifted - std::log((logits.array() - logits.maxCoeff()).exp().sum());

  // L = -alpha log(p_y) m(p_y) with m = (1 - lambda) + lambda q^gamma, so
  // dL/dz_k = G (p_k - [k == y]) where G = alpha (m + p_y log(p_y) m'(p_y)).
  const double m = (1.0 - config.lambda) + config.lambda * std::pow(q, config.gamma);
  double modulation_slope = 0.0;  // p_y log(p_y) m'(p_y), m' = -lambda gamma q^(gamma-1)
  if (config.lambda > 0.0 && config.gamma > 0.0 && q > 0.0)
    modulation_slope = -config.lambda * config.gamma * std::pow(q, config.gamma - 1.0) * p_y * log_p;
  const double g = weights.alpha[y] * (m + modulation_slope);

  Eigen::VectorXd grad = g * p;
  grad[y] -= g;
  return grad;
}

}  // namespace cbtail
