// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The cbtail Authors

#include "cbtail/model.hpp"

#include <cmath>
#include <string>

#include "cbtail/errors.hpp"
#include "cbtail/rng.hpp"

namespace cbtail {

namespace {

constexpr std::uint64_t kBackboneStream = 1;
constexpr std::uint64_t kClassifierStream = 2;

Eigen::MatrixXd uniform_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols, double bound) {
  Eigen::MatrixXd m(rows, cols);
  // Fill in row-major order so the draw sequence does not depend on storage order.
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = rng.uniform(-bound, bound);
  return m;
}

void check_input_rows(const Model& model, Eigen::Index rows) {
  if (rows != model.input_dim())
    throw DimensionMismatch("input has dimension " + std::to_string(rows) + ", model expects " +
                            std::to_string(model.input_dim()));
}

void run_head(const Model& model, ForwardCache& cache) {
  cache.logits = model.classifier.weight.transpose() * cache.features;
  cache.logits.colwise() += model.classifier.bias;
  cache.probabilities = softmax_columns(cache.logits);
}

}  // namespace

Model Model::create(const ModelShape& shape, std::uint64_t seed) {
  if (shape.input_dim <= 0) throw InvalidArgument("input_dim must be positive");
  if (shape.num_classes < 2) throw InvalidArgument("a classifier needs at least two classes");
  Model model;
  model.backbone.input_dim = shape.input_dim;
  Rng rng(derive_seed(seed, kBackboneStream));
  int fan_in = shape.input_dim;
  for (int width : shape.hidden_widths) {
    if (width <= 0) throw InvalidArgument("hidden widths must be positive");
    DenseLayer layer{uniform_matrix(rng, width, fan_in, std::sqrt(6.0 / fan_in)), Eigen::VectorXd::Zero(width)};
    model.backbone.layers.push_back(std::move(layer));
    fan_in = width;
  }
  model.classifier.weight = Eigen::MatrixXd::Zero(fan_in, shape.num_classes);
  model.classifier.bias = Eigen::VectorXd::Zero(shape.num_classes);
  return reinit_classifier(std::move(model), seed);
}

ModelShape Model::shape() const {
  ModelShape s{backbone.input_dim, {}, num_classes()};
  for (const auto& layer : backbone.layers) s.hidden_widths.push_back(static_cast<int>(layer.bias.size()));
  return s;
}

Eigen::MatrixXd softmax_columns(const Eigen::MatrixXd& logits) {
  Eigen::MatrixXd out(logits.rows(), logits.cols());
  for (Eigen::Index j = 0; j < logits.cols(); ++j) {
    const double peak = logits.col(j).maxCoeff();
    out.col(j) = (logits.col(j).array() - peak).exp();
    out.col(j) /= out.col(j).sum();
  }
  return out;
}

Eigen::MatrixXd extract_features(const Backbone& backbone, const Eigen::MatrixXd& inputs) {
  if (inputs.rows() != backbone.input_dim)
    throw DimensionMismatch("input has dimension " + std::to_string(inputs.rows()) +
                            ", backbone expects " + std::to_string(backbone.input_dim));
  Eigen::MatrixXd a = inputs;
  for (const auto& layer : backbone.layers) {
    Eigen::MatrixXd pre = layer.weight * a;
    pre.colwise() += layer.bias;
    a = pre.cwiseMax(0.0);
  }
  return a;
}

ForwardCache forward_batch(const Model& model, const Eigen::MatrixXd& inputs) {
  check_input_rows(model, inputs.rows());
  ForwardCache cache;
  cache.inputs = inputs;
  const Eigen::MatrixXd* a = &cache.inputs;
  for (const auto& layer : model.backbone.layers) {
    Eigen::MatrixXd pre = layer.weight * *a;
    pre.colwise() += layer.bias;
    cache.activations.push_back(pre.cwiseMax(0.0));
    a = &cache.activations.back();
  }
  cache.features = *a;
  run_head(model, cache);
  return cache;
}

ForwardCache forward_from_features(const Model& model, const Eigen::MatrixXd& features) {
  if (features.rows() != model.feature_dim())
    throw DimensionMismatch("features have dimension " + std::to_string(features.rows()) +
                            ", classifier expects " + std::to_string(model.feature_dim()));
  ForwardCache cache;
  cache.features = features;
  run_head(model, cache);
  return cache;
}

ForwardResult forward(const Model& model, const Eigen::VectorXd& x) {
  const ForwardCache cache = forward_batch(model, x);
  return {cache.features.col(0), cache.logits.col(0), cache.probabilities.col(0)};
}

Gradients backward(const Model& model, const ForwardCache& cache, const Eigen::MatrixXd& logit_grads) {
  if (logit_grads.rows() != model.num_classes() || logit_grads.cols() != cache.features.cols())
    throw DimensionMismatch("logit gradient shape does not match the cached batch");

  Gradients grads;
  grads.classifier_weight = cache.features * logit_grads.transpose();
  grads.classifier_bias = logit_grads.rowwise().sum();
  if (model.backbone.frozen || model.backbone.layers.empty()) return grads;

  const auto& layers = model.backbone.layers;
  if (cache.activations.size() != layers.size())
    throw DimensionMismatch("forward cache holds no backbone activations");

  grads.backbone.resize(layers.size());
  Eigen::MatrixXd upstream = model.classifier.weight * logit_grads;  // dL/dz
  for (std::size_t l = layers.size(); l-- > 0;) {
    // ReLU gate: the post-activation is positive exactly where the pre-activation was.
    const Eigen::MatrixXd delta = (cache.activations[l].array() > 0.0).select(upstream, 0.0);
    const Eigen::MatrixXd& below = l == 0 ? cache.inputs : cache.activations[l - 1];
    grads.backbone[l].weight = delta * below.transpose();
    grads.backbone[l].bias = delta.rowwise().sum();
    if (l > 0) upstream = layers[l].weight.transpose() * delta;
  }
  return grads;
}

Model reinit_classifier(Model model, std::uint64_t seed) {
  const int d = model.feature_dim();
  const int c = model.num_classes();
  Rng rng(derive_seed(seed, kClassifierStream));
  model.classifier.weight = uniform_matrix(rng, d, c, 1.0 / std::sqrt(static_cast<double>(d)));
  model.classifier.bias = Eigen::VectorXd::Zero(c);
  return model;
}

}  // namespace cbtail
