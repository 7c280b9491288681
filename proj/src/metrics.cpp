// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The cbtail Authors

#include "cbtail/metrics.hpp"

#include <numeric>
#include <string>

#include "cbtail/errors.hpp"

namespace cbtail {

namespace {

double ratio(std::int64_t num, std::int64_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

double mean(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

ConfusionMatrix::ConfusionMatrix(int num_classes)
    : num_classes_(num_classes), cells_(static_cast<std::size_t>(num_classes) * num_classes, 0) {
  if (num_classes < 1) throw InvalidArgument("confusion matrix needs at least one class");
}

std::int64_t ConfusionMatrix::total() const {
  return std::accumulate(cells_.begin(), cells_.end(), std::int64_t{0});
}

std::int64_t ConfusionMatrix::row_sum(int truth) const {
  std::int64_t s = 0;
  for (int j = 0; j < num_classes_; ++j) s += (*this)(truth, j);
  return s;
}

std::int64_t ConfusionMatrix::column_sum(int pred) const {
  std::int64_t s = 0;
  for (int i = 0; i < num_classes_; ++i) s += (*this)(i, pred);
  return s;
}

ConfusionMatrix confusion(std::span<const int> preds, std::span<const int> truths, int num_classes) {
  if (preds.size() != truths.size())
    throw LengthMismatch(std::to_string(preds.size()) + " predictions for " + std::to_string(truths.size()) +
                         " labels");
  ConfusionMatrix cm(num_classes);
  for (std::size_t i = 0; i < preds.size(); ++i) {
    for (int label : {truths[i], preds[i]})
      if (label < 0 || label >= num_classes)
        throw LabelOutOfRange("label " + std::to_string(label) + " at position " + std::to_string(i) +
                              " outside [0, " + std::to_string(num_classes) + ")");
    ++cm(truths[i], preds[i]);
  }
  return cm;
}

MetricsReport compute_metrics(const ConfusionMatrix& cm) {
  const std::int64_t total = cm.total();
  if (total < 1) throw EmptyMatrix("confusion matrix holds no samples");
  const int c = cm.num_classes();

  MetricsReport r;
  r.precision.resize(c);
  r.recall.resize(c);
  r.specificity.resize(c);
  r.f1.resize(c);
  std::int64_t correct = 0;
  for (int j = 0; j < c; ++j) {
    const std::int64_t tp = cm(j, j);
    const std::int64_t fn = cm.row_sum(j) - tp;
    const std::int64_t fp = cm.column_sum(j) - tp;
    const std::int64_t tn = total - tp - fn - fp;
    correct += tp;
    r.precision[j] = ratio(tp, tp + fp);
    r.recall[j] = ratio(tp, tp + fn);
    r.specificity[j] = ratio(tn, tn + fp);
    const double pr = r.precision[j] + r.recall[j];
    r.f1[j] = pr > 0.0 ? 2.0 * r.precision[j] * r.recall[j] / pr : 0.0;
  }
  r.macro_precision = mean(r.precision);
  r.balanced_accuracy = mean(r.recall);
  r.macro_specificity = mean(r.specificity);
  r.macro_f1 = mean(r.f1);
  r.accuracy = ratio(correct, total);
  return r;
}

}  // namespace cbtail
