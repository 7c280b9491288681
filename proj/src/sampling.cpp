// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The cbtail Authors

#include "cbtail/sampling.hpp"

#include <algorithm>
#include <numeric>
#include <string>
#include <unordered_map>

#include "cbtail/errors.hpp"
#include "cbtail/rng.hpp"

namespace cbtail {

ClassCounts::ClassCounts(std::vector<std::int64_t> counts) : counts_(std::move(counts)) {
  if (counts_.size() < 2) throw InvalidArgument("class counts need at least two classes");
  for (std::size_t j = 0; j < counts_.size(); ++j) {
    if (counts_[j] < 1)
      throw InvalidArgument("class " + std::to_string(j) + " has no samples");
    total_ += counts_[j];
  }
}

ClassCounts ClassCounts::from_labels(std::span<const int> labels, int num_classes) {
  std::vector<std::int64_t> counts(std::max(num_classes, 0), 0);
  for (int y : labels) {
    if (y < 0 || y >= num_classes) throw LabelOutOfRange("label " + std::to_string(y) + " outside [0, " + std::to_string(num_classes) + ")");
    ++counts[y];
  }
  return ClassCounts(std::move(counts));
}

double class_prior(const ClassCounts& counts, int j) {
  if (j < 0 || j >= counts.num_classes())
    throw IndexOutOfRange("class index " + std::to_string(j) + " outside [0, " +
                          std::to_string(counts.num_classes()) + ")");
  return static_cast<double>(counts[j]) / static_cast<double>(counts.total());
}

SamplingPlan instance_balanced_plan(std::span<const int> labels, std::uint64_t seed) {
  if (labels.empty()) throw EmptyDataset("cannot sample from an empty dataset");
  SamplingPlan plan{std::vector<std::size_t>(labels.size()), SamplingRegime::kInstanceBalanced, seed};
  std::iota(plan.indices.begin(), plan.indices.end(), std::size_t{0});
  Rng rng(seed);
  for (std::size_t i = plan.indices.size() - 1; i > 0; --i)
    std::swap(plan.indices[i], plan.indices[rng.below(i + 1)]);
  return plan;
}

SamplingPlan class_balanced_plan(std::span<const int> labels, std::size_t n_draws, std::uint64_t seed) {
  if (labels.empty()) throw EmptyDataset("cannot sample from an empty dataset");
  if (n_draws == 0) throw InvalidArgument("n_draws must be positive");

  std::unordered_map<int, std::int64_t> counts;
  for (int y : labels) ++counts[y];

  // Cumulative weights sum to the number of distinct classes.
  std::vector<double> cumulative(labels.size());
  double running = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    running += 1.0 / static_cast<double>(counts[labels[i]]);
    cumulative[i] = running;
  }

  SamplingPlan plan{{}, SamplingRegime::kClassBalanced, seed};
  plan.indices.reserve(n_draws);
  Rng rng(seed);
  for (std::size_t d = 0; d < n_draws; ++d) {
    const double u = rng.uniform01() * running;
    auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
    if (it == cumulative.end()) --it;
    plan.indices.push_back(static_cast<std::size_t>(it - cumulative.begin()));
  }
  return plan;
}

}  // namespace cbtail
