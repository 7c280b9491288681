// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The cbtail Authors

#include <doctest.h>

#include <algorithm>
#include <vector>

#include "../oracles.hpp"
#include "cbtail/errors.hpp"
#include "cbtail/metrics.hpp"
#include "cbtail/rng.hpp"

using namespace cbtail;

namespace {

double brute_ratio(long num, long den) { return den == 0 ? 0.0 : static_cast<double>(num) / den; }

}  // namespace

TEST_CASE("confusion counts") {
  const std::vector<int> truths{0, 0, 1, 1}, preds{0, 1, 1, 1};
  const ConfusionMatrix cm = confusion(preds, truths, 2);
  CHECK(cm(0, 0) == 1);
  CHECK(cm(0, 1) == 1);
  CHECK(cm(1, 0) == 0);
  CHECK(cm(1, 1) == 2);
  CHECK(cm.total() == 4);
  CHECK(cm.row_sum(0) == 2);
  CHECK(cm.column_sum(1) == 3);

  const ConfusionMatrix diag = confusion(truths, truths, 3);
  CHECK(diag(0, 0) == 2);
  CHECK(diag(1, 1) == 2);
  CHECK(diag(2, 2) == 0);

  const ConfusionMatrix empty = confusion({}, {}, 3);
  CHECK(empty.total() == 0);
  CHECK(empty == ConfusionMatrix(3));

  CHECK_THROWS_AS(confusion(std::vector<int>{0}, std::vector<int>{0, 1}, 2), LengthMismatch);
  CHECK_THROWS_AS(confusion(std::vector<int>{2}, std::vector<int>{0}, 2), LabelOutOfRange);
  CHECK_THROWS_AS(confusion(std::vector<int>{0}, std::vector<int>{-1}, 2), LabelOutOfRange);
}

TEST_CASE("compute_metrics hand-computed example") {
  const std::vector<int> truths{0, 0, 1, 1}, preds{0, 1, 1, 1};
  const MetricsReport r = compute_metrics(confusion(preds, truths, 2));
  CHECK(r.balanced_accuracy == 0.75);
  CHECK(r.macro_precision == doctest::Approx(5.0 / 6.0).epsilon(1e-15));
  CHECK(r.macro_f1 == doctest::Approx(11.0 / 15.0).epsilon(1e-15));
  CHECK(r.macro_specificity == 0.75);
  CHECK(r.recall == std::vector<double>{0.5, 1.0});
  CHECK(r.specificity == std::vector<double>{1.0, 0.5});
}

TEST_CASE("compute_metrics edge cases") {
  ConfusionMatrix perfect(3);
  perfect(0, 0) = 4;
  perfect(1, 1) = 1;
  perfect(2, 2) = 9;
  const MetricsReport p = compute_metrics(perfect);
  CHECK(p.macro_f1 == 1.0);
  CHECK(p.balanced_accuracy == 1.0);
  CHECK(p.macro_precision == 1.0);
  CHECK(p.macro_specificity == 1.0);

  // Class 2 has neither truths nor predictions: precision, recall, F1 are 0.
  ConfusionMatrix absent(3);
  absent(0, 0) = 3;
  absent(1, 1) = 3;
  const MetricsReport a = compute_metrics(absent);
  CHECK(a.precision[2] == 0.0);
  CHECK(a.recall[2] == 0.0);
  CHECK(a.f1[2] == 0.0);
  CHECK(a.balanced_accuracy == doctest::Approx(2.0 / 3.0));
  CHECK(a.macro_f1 == doctest::Approx(2.0 / 3.0));

  CHECK_THROWS_AS(compute_metrics(ConfusionMatrix(2)), EmptyMatrix);
}

TEST_CASE("compute_metrics agrees with a brute-force counter") {
  Rng rng(77);
  for (int trial = 0; trial < 300; ++trial) {
    const int c = 2 + static_cast<int>(rng.below(5));
    const std::size_t n = 1 + rng.below(200);
    std::vector<int> truths(n), preds(n);
    for (std::size_t i = 0; i < n; ++i) {
      truths[i] = static_cast<int>(rng.below(c));
      preds[i] = rng.uniform01() < 0.5 ? truths[i] : static_cast<int>(rng.below(c));
    }
    const MetricsReport r = compute_metrics(confusion(preds, truths, c));
    const auto counts = oracle::brute_counts(preds, truths, c);

    double mf1 = 0, bacc = 0, mp = 0, ms = 0;
    for (int j = 0; j < c; ++j) {
      const auto& k = counts[j];
      const double prec = brute_ratio(k.tp, k.tp + k.fp);
      const double rec = brute_ratio(k.tp, k.tp + k.fn);
      const double spec = brute_ratio(k.tn, k.tn + k.fp);
      const double f1 = prec + rec == 0.0 ? 0.0 : 2.0 * prec * rec / (prec + rec);
      CHECK(r.precision[j] == prec);
      CHECK(r.recall[j] == rec);
      CHECK(r.specificity[j] == spec);
      CHECK(r.f1[j] == doctest::Approx(f1).epsilon(1e-15));
      mf1 += r.f1[j];
      bacc += rec;
      mp += prec;
      ms += spec;
    }
    CHECK(r.macro_f1 == doctest::Approx(mf1 / c).epsilon(1e-15));
    CHECK(r.balanced_accuracy == doctest::Approx(bacc / c).epsilon(1e-15));
    CHECK(r.macro_precision == doctest::Approx(mp / c).epsilon(1e-15));
    CHECK(r.macro_specificity == doctest::Approx(ms / c).epsilon(1e-15));

    for (double v : {r.macro_f1, r.balanced_accuracy, r.macro_precision, r.macro_specificity, r.accuracy})
      CHECK((v >= 0.0 && v <= 1.0));
    CHECK(r.macro_f1 <= *std::max_element(r.f1.begin(), r.f1.end()) + 1e-15);
    CHECK(r.macro_f1 >= *std::min_element(r.f1.begin(), r.f1.end()) - 1e-15);
  }
}

TEST_CASE("balanced accuracy ignores per-class duplication") {
  Rng rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    const int c = 3;
    std::vector<int> truths(60), preds(60);
    for (std::size_t i = 0; i < truths.size(); ++i) {
      truths[i] = static_cast<int>(i % c);
      preds[i] = static_cast<int>(rng.below(c));
    }
    const double base = compute_metrics(confusion(preds, truths, c)).balanced_accuracy;
    const int k = 2 + static_cast<int>(rng.below(4));
    const int cls = static_cast<int>(rng.below(c));
    std::vector<int> t2 = truths, p2 = preds;
    for (std::size_t i = 0; i < truths.size(); ++i)
      if (truths[i] == cls)
        for (int r = 1; r < k; ++r) {
          t2.push_back(truths[i]);
          p2.push_back(preds[i]);
        }
    CHECK(compute_metrics(confusion(p2, t2, c)).balanced_accuracy == doctest::Approx(base).epsilon(1e-14));
  }
}
