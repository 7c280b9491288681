// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The cbtail Authors

#include "cbtail/inference.hpp"

#include <string>

#include "cbtail/errors.hpp"

namespace cbtail {

std::vector<Image> tta_views(const Image& image, int k) {
  if (k < 1 || k > kMaxTtaViews)
    throw UnsupportedK("K = " + std::to_string(k) + " outside the fixed view set [1, " +
                       std::to_string(kMaxTtaViews) + "]");
  using View = Image (*)(const Image&);
  static constexpr View kViews[kMaxTtaViews] = {
      [](const Image& im) { return im; },
      flip_horizontal,
      flip_vertical,
      rotate90,
      rotate180,
      rotate270,
      [](const Image& im) { return scale_brightness(im, 0.9); },
      [](const Image& im) { return scale_brightness(im, 1.1); },
  };
  std::vector<Image> views;
  views.reserve(k);
  for (int i = 0; i < k; ++i) views.push_back(kViews[i](image));
  return views;
}

Eigen::VectorXd average_probabilities(std::span<const Eigen::VectorXd> components) {
  if (components.empty()) throw InvalidArgument("nothing to average");
  const Eigen::Index c = components.front().size();
  // Neumaier summation per class: the result does not depend on component order
  // beyond the last bit.
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(c);
  Eigen::VectorXd compensation = Eigen::VectorXd::Zero(c);
  for (const auto& p : components) {
    if (p.size() != c) throw ModelDimensionMismatch("probability vectors differ in length");
    for (Eigen::Index j = 0; j < c; ++j) {
      const double t = sum[j] + p[j];
      compensation[j] += std::abs(sum[j]) >= std::abs(p[j]) ? (sum[j] - t) + p[j] : (p[j] - t) + sum[j];
      sum[j] = t;
    }
  }
  return (sum + compensation) / static_cast<double>(components.size());
}

namespace {

void check_models(std::span<const Model> models) {
  if (models.empty()) throw InvalidArgument("ensemble needs at least one model");
  for (const Model& m : models)
    if (m.input_dim() != models.front().input_dim() || m.num_classes() != models.front().num_classes())
      throw ModelDimensionMismatch("ensemble members disagree on input dimension or class count");
}

}  // namespace

Eigen::VectorXd ensemble_predict(std::span<const Model> models, std::span<const Eigen::VectorXd> view_inputs) {
  check_models(models);
  if (view_inputs.empty()) throw InvalidArgument("ensemble needs at least one view");
  std::vector<Eigen::VectorXd> components;
  components.reserve(models.size() * view_inputs.size());
  for (const Model& m : models)
    for (const auto& x : view_inputs) {
      if (x.size() != m.input_dim())
        throw ModelDimensionMismatch("view input has dimension " + std::to_string(x.size()) + ", models expect " +
                                     std::to_string(m.input_dim()));
      components.push_back(forward(m, x).probabilities);
    }
  return average_probabilities(components);
}

Eigen::VectorXd ensemble_predict(std::span<const Model> models, const Image& image, int k,
                                 const PreprocessConfig& preprocess) {
  check_models(models);
  if (models.front().input_dim() != preprocess.input_dim())
    throw ModelDimensionMismatch("preprocessing yields " + std::to_string(preprocess.input_dim()) +
                                 " inputs, models expect " + std::to_string(models.front().input_dim()));
  const PreparedImage prepared = prepare_image(image, preprocess);
  std::vector<Eigen::VectorXd> inputs;
  for (const Image& view : tta_views(prepared.image, k)) inputs.push_back(pool_to_vector(view, preprocess.pool_to));
  return ensemble_predict(models, inputs);
}

int argmax_class(std::span<const double> p) {
  if (p.empty()) throw InvalidArgument("argmax of an empty vector");
  int best = 0;
  for (std::size_t j = 1; j < p.size(); ++j)
    if (p[j] > p[best]) best = static_cast<int>(j);
  return best;
}

}  // namespace cbtail
