// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The cbtail Authors

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cbtail/dataio.hpp"
#include "cbtail/losses.hpp"
#include "cbtail/model.hpp"
#include "cbtail/optimizer.hpp"

namespace cbtail {

struct TrainConfig {
  int stage = 1;
  int epochs = 100;
  int batch_size = 256;
  double lr_max = 1e-4;
  double lr_min = 0.0;
  AdamWConfig adamw;
  int early_stopping_patience = 10;
  std::uint64_t seed = 0;
  LossConfig loss;  // used by stage 2 only
  bool renormalize_weights = false;
  /// Stage 2 refuses a model with trained_stage == 0 unless set.
  bool allow_untrained = false;

  /// Stage 1: 100 epochs at 1e-4. Stage 2: 50 epochs at 1e-3.
  static TrainConfig defaults(int stage);
  /// Overrides fields from keys named after the fields (adamw fields are
  /// `beta1`, `beta2`, `epsilon`, `weight_decay`; loss fields `beta`, `gamma`, `lambda`).
  static TrainConfig from_key_values(const KeyValues& kv, int stage);
  KeyValues to_key_values() const;
  void validate() const;
};

enum class StopReason { kCompleted, kEarlyStopped };

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0;
  double val_macro_f1 = 0;
  double val_balanced_accuracy = 0;
  double learning_rate = 0;
};

struct TrainReport {
  std::vector<EpochRecord> epochs;
  int best_epoch = 0;  // zero-based index into `epochs`
  double best_metric = 0;
  StopReason stop_reason = StopReason::kCompleted;
  bool restored_best = true;

  std::string to_csv() const;
};

struct TrainResult {
  Model model;
  TrainReport report;
};

/// End-to-end training of backbone and classifier with unweighted cross
/// entropy over instance-balanced epochs. Selects on validation Macro-F1.
TrainResult train_stage1(const Dataset& train, const Dataset& validation, Model model,
                         const TrainConfig& config);

/// Classifier re-training: freezes the backbone, reinitializes (W, b) and trains
/// them with the hybrid loss over class-balanced draws. Selects on validation
/// balanced accuracy. Throws MissingStage1 for an untrained model.
TrainResult train_stage2(const Dataset& train, const Dataset& validation, Model model,
                         const TrainConfig& config);

/// Mean hybrid loss over a batch and its logit gradients (C x batch, divided by batch size).
double batch_loss_and_grad(const Eigen::MatrixXd& logits, std::span<const int> labels,
                           const LossConfig& config, const ClassWeights& weights,
                           Eigen::MatrixXd* grad);

/// Argmax predictions of a model over a dataset.
std::vector<int> predict_labels(const Model& model, const Eigen::MatrixXd& inputs);

}  // namespace cbtail
