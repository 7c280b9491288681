// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The cbtail Authors

#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

namespace cbtail {

/// Affine map out = weight * in + bias; weight is out x in.
struct DenseLayer {
  Eigen::MatrixXd weight;
  Eigen::VectorXd bias;
};

/// f(x; theta): stack of affine maps, each followed by ReLU.
struct Backbone {
  std::vector<DenseLayer> layers;
  bool frozen = false;
  int input_dim = 0;

  int feature_dim() const {
    return layers.empty() ? input_dim : static_cast<int>(layers.back().bias.size());
  }
};

/// g(z; W, b) = W^T z + b; weight is feature_dim x C.
struct Classifier {
  Eigen::MatrixXd weight;
  Eigen::VectorXd bias;

  int num_classes() const { return static_cast<int>(bias.size()); }
};

struct ModelShape {
  int input_dim = 0;
  std::vector<int> hidden_widths{64, 32};
  int num_classes = 0;
};

class Model {
 public:
  /// Kaiming-uniform hidden layers (bound sqrt(6 / fan_in)), zero biases;
  /// classifier from reinit_classifier.
  static Model create(const ModelShape& shape, std::uint64_t seed);

  ModelShape shape() const;
  int input_dim() const { return backbone.input_dim; }
  int feature_dim() const { return backbone.feature_dim(); }
  int num_classes() const { return classifier.num_classes(); }

  Backbone backbone;
  Classifier classifier;
  /// 0 = freshly initialized, 1 = after representation learning, 2 = after rebalancing.
  int trained_stage = 0;
};

/// Activations of one batch; columns are samples.
struct ForwardCache {
  Eigen::MatrixXd inputs;
  std::vector<Eigen::MatrixXd> activations;  // post-ReLU output of each backbone layer
  Eigen::MatrixXd features;
  Eigen::MatrixXd logits;
  Eigen::MatrixXd probabilities;
};

struct ForwardResult {
  Eigen::VectorXd features;
  Eigen::VectorXd logits;
  Eigen::VectorXd probabilities;
};

struct Gradients {
  std::vector<DenseLayer> backbone;  // empty when the backbone is frozen
  Eigen::MatrixXd classifier_weight;
  Eigen::VectorXd classifier_bias;
};

/// Throws DimensionMismatch when x.size() != input_dim.
ForwardResult forward(const Model& model, const Eigen::VectorXd& x);
ForwardCache forward_batch(const Model& model, const Eigen::MatrixXd& inputs);
/// Head-only pass over precomputed features (no backbone activations cached).
ForwardCache forward_from_features(const Model& model, const Eigen::MatrixXd& features);
/// z = f(x; theta) for every column.
Eigen::MatrixXd extract_features(const Backbone& backbone, const Eigen::MatrixXd& inputs);

/// Column-wise softmax with max subtraction.
Eigen::MatrixXd softmax_columns(const Eigen::MatrixXd& logits);

/// Backpropagates `logit_grads` (C x batch, already reduced over the batch as
/// the caller wants) into parameter gradients.
Gradients backward(const Model& model, const ForwardCache& cache, const Eigen::MatrixXd& logit_grads);

/// W ~ U(-1/sqrt(feature_dim), 1/sqrt(feature_dim)), b = 0; backbone untouched.
Model reinit_classifier(Model model, std::uint64_t seed);

}  // namespace cbtail
