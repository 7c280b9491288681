// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The cbtail Authors

#pragma once

#include <span>
#include <vector>

#include <Eigen/Core>

#include "cbtail/dataio.hpp"
#include "cbtail/image.hpp"
#include "cbtail/model.hpp"

namespace cbtail {

inline constexpr int kMaxTtaViews = 8;

/// First K of: identity, horizontal flip, vertical flip, rotate 90, rotate 180,
/// rotate 270, brightness x0.9, brightness x1.1. Throws UnsupportedK outside [1, 8].
std::vector<Image> tta_views(const Image& image, int k);

/// Uniform mean of probability vectors with compensated summation.
/// All vectors must share one length; throws ModelDimensionMismatch otherwise.
Eigen::VectorXd average_probabilities(std::span<const Eigen::VectorXd> components);

/// p_ens = 1/(M K) sum_m sum_k p_k^(m) over already preprocessed view inputs.
Eigen::VectorXd ensemble_predict(std::span<const Model> models,
                                 std::span<const Eigen::VectorXd> view_inputs);

/// Image entry point: stain normalization and resize/crop once, then K views,
/// each pooled to the model input. Throws ModelDimensionMismatch if the models
/// disagree on input size or class count.
Eigen::VectorXd ensemble_predict(std::span<const Model> models, const Image& image, int k,
                                 const PreprocessConfig& preprocess);

/// Index of the maximum; ties go to the lowest index.
int argmax_class(std::span<const double> p);
inline int argmax_class(const Eigen::VectorXd& p) {
  return argmax_class(std::span<const double>(p.data(), static_cast<std::size_t>(p.size())));
}

}  // namespace cbtail
