// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The cbtail Authors

#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace cbtail {

/// C x C counts; entry (i, j) is the number of samples of true class i predicted as j.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(int num_classes);

  int num_classes() const { return num_classes_; }
  std::int64_t operator()(int truth, int pred) const { return cells_[truth * num_classes_ + pred]; }
  std::int64_t& operator()(int truth, int pred) { return cells_[truth * num_classes_ + pred]; }

  std::int64_t total() const;
  std::int64_t row_sum(int truth) const;
  std::int64_t column_sum(int pred) const;

  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;

 private:
  int num_classes_;
  std::vector<std::int64_t> cells_;
};

/// Undefined per-class ratios (zero denominators) are reported as 0.
struct MetricsReport {
  double macro_f1 = 0;
  double balanced_accuracy = 0;
  double macro_precision = 0;
  double macro_specificity = 0;
  double accuracy = 0;
  std::vector<double> precision;
  std::vector<double> recall;
  std::vector<double> specificity;
  std::vector<double> f1;
};

/// Throws LengthMismatch or LabelOutOfRange.
ConfusionMatrix confusion(std::span<const int> preds, std::span<const int> truths, int num_classes);

/// Throws EmptyMatrix when the matrix holds no samples.
MetricsReport compute_metrics(const ConfusionMatrix& cm);

}  // namespace cbtail
