// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The cbtail Authors

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "cbtail/errors.hpp"
#include "cbtail/sampling.hpp"

using namespace cbtail;

namespace {

std::vector<int> labels_from_counts(const std::vector<int>& counts) {
  std::vector<int> labels;
  for (std::size_t j = 0; j < counts.size(); ++j) labels.insert(labels.end(), counts[j], static_cast<int>(j));
  return labels;
}

}  // namespace

TEST_CASE("ClassCounts invariants") {
  CHECK_THROWS_AS(ClassCounts({5}), InvalidArgument);
  CHECK_THROWS_AS(ClassCounts({5, 0}), InvalidArgument);
  const ClassCounts c = ClassCounts::from_labels(std::vector<int>{0, 1, 1, 2, 2, 2}, 3);
  CHECK(c.values() == std::vector<std::int64_t>{1, 2, 3});
  CHECK(c.total() == 6);
  CHECK_THROWS_AS(ClassCounts::from_labels(std::vector<int>{0, 3}, 3), LabelOutOfRange);
}

TEST_CASE("class_prior") {
  CHECK(class_prior(ClassCounts({10, 10, 10}), 0) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(class_prior(ClassCounts({10, 30, 60}), 2) == doctest::Approx(0.6).epsilon(1e-15));
  CHECK(class_prior(ClassCounts({1, 9999}), 0) == doctest::Approx(1e-4).epsilon(1e-15));
  const ClassCounts counts({2000, 600, 180, 54, 16});
  double sum = 0;
  for (int j = 0; j < 5; ++j) sum += class_prior(counts, j);
  CHECK(std::abs(sum - 1.0) <= 1e-12);
  CHECK_THROWS_AS(class_prior(counts, 5), IndexOutOfRange);
  CHECK_THROWS_AS(class_prior(counts, -1), IndexOutOfRange);
}

TEST_CASE("instance_balanced_plan is a deterministic permutation") {
  const std::vector<int> labels{0, 1, 0, 1, 1};
  const SamplingPlan a = instance_balanced_plan(labels, 42);
  const SamplingPlan b = instance_balanced_plan(labels, 42);
  CHECK(a.indices == b.indices);
  CHECK(a.regime == SamplingRegime::kInstanceBalanced);
  std::vector<std::size_t> sorted = a.indices;
  std::sort(sorted.begin(), sorted.end());
  CHECK(sorted == std::vector<std::size_t>{0, 1, 2, 3, 4});
  CHECK(instance_balanced_plan(labels, 43).indices != a.indices);
  CHECK_THROWS_AS(instance_balanced_plan(std::vector<int>{}, 1), EmptyDataset);
}

TEST_CASE("instance_balanced_plan first position is uniform") {
  const std::vector<int> labels(6, 0);
  std::vector<int> first(6, 0);
  const int epochs = 10000;
  for (int e = 0; e < epochs; ++e) ++first[instance_balanced_plan(labels, 1000 + e).indices[0]];
  for (int i = 0; i < 6; ++i) CHECK(std::abs(first[i] / double(epochs) - 1.0 / 6.0) < 0.02);
}

TEST_CASE("class_balanced_plan equalizes classes") {
  SUBCASE("two classes (100, 1)") {
    const auto labels = labels_from_counts({100, 1});
    const SamplingPlan plan = class_balanced_plan(labels, 100000, 9);
    CHECK(plan.regime == SamplingRegime::kClassBalanced);
    CHECK(plan.indices.size() == 100000);
    std::size_t minority = 0;
    for (std::size_t i : plan.indices) minority += labels[i] == 1;
    CHECK(std::abs(minority / 1e5 - 0.5) < 0.01);
  }
  SUBCASE("balanced case matches uniform index draws") {
    const auto labels = labels_from_counts({50, 50});
    const SamplingPlan plan = class_balanced_plan(labels, 100000, 10);
    std::vector<int> hits(100, 0);
    for (std::size_t i : plan.indices) ++hits[i];
    // Binomial(1e5, 0.01) has sd ~31.5; allow 5 sd.
    for (int h : hits) CHECK(std::abs(h - 1000) < 160);
  }
  SUBCASE("long-tail counts") {
    const auto labels = labels_from_counts({2000, 600, 180, 54, 16});
    const SamplingPlan plan = class_balanced_plan(labels, 100000, 11);
    std::vector<int> freq(5, 0);
    for (std::size_t i : plan.indices) ++freq[labels[i]];
    for (int f : freq) CHECK(std::abs(f / 1e5 - 0.2) < 0.01);
    CHECK(class_balanced_plan(labels, 100000, 11).indices == plan.indices);
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(class_balanced_plan(std::vector<int>{}, 10, 1), EmptyDataset);
    CHECK_THROWS_AS(class_balanced_plan(std::vector<int>{0, 1}, 0, 1), InvalidArgument);
  }
}
