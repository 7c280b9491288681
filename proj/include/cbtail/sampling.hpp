// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The cbtail Authors

#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace cbtail {

/// Per-class sample counts; at least two classes, each with one sample or more.
class ClassCounts {
 public:
  explicit ClassCounts(std::vector<std::int64_t> counts);
  /// Histogram of `labels` over [0, num_classes).
  static ClassCounts from_labels(std::span<const int> labels, int num_classes);

  int num_classes() const { return static_cast<int>(counts_.size()); }
  std::int64_t operator[](int j) const { return counts_[j]; }
  std::int64_t total() const { return total_; }
  const std::vector<std::int64_t>& values() const { return counts_; }

 private:
  std::vector<std::int64_t> counts_;
  std::int64_t total_ = 0;
};

enum class SamplingRegime { kInstanceBalanced, kClassBalanced };

struct SamplingPlan {
  std::vector<std::size_t> indices;
  SamplingRegime regime;
  std::uint64_t seed;
};

/// n_j / n. Throws IndexOutOfRange for j outside [0, C).
double class_prior(const ClassCounts& counts, int j);

/// Uniform random permutation of [0, n) (Fisher-Yates). Throws EmptyDataset.
SamplingPlan instance_balanced_plan(std::span<const int> labels, std::uint64_t seed);

/// `n_draws` indices with replacement, index i drawn with probability
/// proportional to 1 / n_{y_i}, by inverse transform on the cumulative weights.
SamplingPlan class_balanced_plan(std::span<const int> labels, std::size_t n_draws,
                                 std::uint64_t seed);

}  // namespace cbtail
