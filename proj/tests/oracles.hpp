// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The cbtail Authors
//
// Test-only reference computations. Nothing here calls into the code paths it
// checks: finite differences, brute-force counters and extended-precision
// re-evaluations.

#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include <Eigen/Core>

namespace cbtail::oracle {

/// Central finite-difference gradient of a scalar function.
inline Eigen::VectorXd central_difference(const std::function<double(const Eigen::VectorXd&)>& f,
                                          const Eigen::VectorXd& x, double step = 1e-5) {
  Eigen::VectorXd g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Eigen::VectorXd hi = x, lo = x;
    hi[i] += step;
    lo[i] -= step;
    g[i] = (f(hi) - f(lo)) / (2.0 * step);
  }
  return g;
}

/// Mixed relative/absolute error: |a - b| / max(|a|, |b|, floor).
inline double relative_error(double a, double b, double floor = 1e-6) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

/// Extended-precision softmax.
inline std::vector<long double> softmax_long(const Eigen::VectorXd& z) {
  long double peak = z.maxCoeff();
  std::vector<long double> e(z.size());
  long double sum = 0;
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    e[i] = std::exp(static_cast<long double>(z[i]) - peak);
    sum += e[i];
  }
  for (auto& v : e) v /= sum;
  return e;
}

/// Plain (unweighted) cross entropy of softmax(z) at label y, in long double.
inline double cross_entropy_long(const Eigen::VectorXd& z, int y) {
  long double peak = z.maxCoeff();
  long double sum = 0;
  for (Eigen::Index i = 0; i < z.size(); ++i) sum += std::exp(static_cast<long double>(z[i]) - peak);
  return static_cast<double>(-(static_cast<long double>(z[y]) - peak - std::log(sum)));
}

/// Per-class TP/FP/FN/TN by scanning samples one at a time.
struct BruteCounts {
  long tp = 0, fp = 0, fn = 0, tn = 0;
};
inline std::vector<BruteCounts> brute_counts(const std::vector<int>& preds, const std::vector<int>& truths,
                                             int num_classes) {
  std::vector<BruteCounts> out(num_classes);
  for (int c = 0; c < num_classes; ++c)
    for (std::size_t i = 0; i < preds.size(); ++i) {
      const bool is_true = truths[i] == c, is_pred = preds[i] == c;
      if (is_true && is_pred) ++out[c].tp;
      else if (!is_true && is_pred) ++out[c].fp;
      else if (is_true && !is_pred) ++out[c].fn;
      else ++out[c].tn;
    }
  return out;
}

}  // namespace cbtail::oracle
