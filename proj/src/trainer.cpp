// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The cbtail Authors

#include "cbtail/trainer.hpp"

#include <algorithm>
#include <functional>
#include <limits>
#include <string>

#include "cbtail/errors.hpp"
#include "cbtail/inference.hpp"
#include "cbtail/metrics.hpp"
#include "cbtail/rng.hpp"
#include "cbtail/sampling.hpp"

namespace cbtail {

namespace {

// Stream identifiers for derive_seed; epochs use kEpochStream + epoch.
constexpr std::uint64_t kReinitStream = 7;
constexpr std::uint64_t kEpochStream = 1000;

void check_datasets(const Dataset& train, const Dataset& validation, const Model& model) {
  if (train.size() == 0) throw EmptyDataset("training set is empty");
  if (validation.size() == 0) throw EmptyDataset("validation set is empty");
  for (const Dataset* d : {&train, &validation}) {
    if (d->input_dim() != model.input_dim())
      throw DimensionMismatch("dataset inputs have dimension " + std::to_string(d->input_dim()) +
                              ", model expects " + std::to_string(model.input_dim()));
    if (static_cast<Eigen::Index>(d->labels.size()) != d->inputs.cols())
      throw DimensionMismatch("dataset has " + std::to_string(d->inputs.cols()) + " inputs but " +
                              std::to_string(d->labels.size()) + " labels");
    for (int y : d->labels)
      if (y < 0 || y >= model.num_classes())
        throw LabelOutOfRange("label " + std::to_string(y) + " outside the model's " +
                              std::to_string(model.num_classes()) + " classes");
  }
  std::vector<int> seen(model.num_classes(), 0);
  for (int y : train.labels) seen[y] = 1;
  if (std::count(seen.begin(), seen.end(), 1) < 2)
    throw InvalidArgument("training labels must cover at least two classes");
}

struct Tensor {
  double* params;
  const double* grads;
  std::size_t size;
};

void step_all(std::span<const Tensor> tensors, std::vector<AdamWState>& states, double lr,
              const AdamWConfig& config) {
  states.resize(tensors.size());
  for (std::size_t i = 0; i < tensors.size(); ++i)
    optimizer_step({tensors[i].params, tensors[i].size}, {tensors[i].grads, tensors[i].size}, states[i], lr,
                   config);
}

Tensor tensor(Eigen::MatrixXd& p, const Eigen::MatrixXd& g) {
  return {p.data(), g.data(), static_cast<std::size_t>(p.size())};
}
Tensor tensor(Eigen::VectorXd& p, const Eigen::VectorXd& g) {
  return {p.data(), g.data(), static_cast<std::size_t>(p.size())};
}

// Shared epoch loop. `run_batch` trains on one batch of plan indices and
// returns the summed loss; `evaluate` returns validation predictions.
struct LoopHooks {
  std::function<SamplingPlan(std::uint64_t seed)> plan;
  std::function<double(std::span<const std::size_t> batch, double lr)> run_batch;
  std::function<std::vector<int>()> predict_validation;
  bool select_on_balanced_accuracy = false;
};

TrainReport run_epochs(Model& model, const Dataset& validation, const TrainConfig& config,
                       const LoopHooks& hooks) {
  TrainReport report;
  Model best = model;
  double best_metric = -std::numeric_limits<double>::infinity();

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const double lr = cosine_lr(epoch, config.epochs, config.lr_max, config.lr_min);
    const SamplingPlan plan = hooks.plan(derive_seed(config.seed, kEpochStream + epoch));
    const std::size_t batch = std::min<std::size_t>(config.batch_size, plan.indices.size());

    double loss_sum = 0.0;
    for (std::size_t start = 0; start < plan.indices.size(); start += batch) {
      const std::size_t len = std::min(batch, plan.indices.size() - start);
      loss_sum += hooks.run_batch(std::span(plan.indices).subspan(start, len), lr);
    }

    const MetricsReport metrics =
        compute_metrics(confusion(hooks.predict_validation(), validation.labels, model.num_classes()));
    report.epochs.push_back({epoch, loss_sum / static_cast<double>(plan.indices.size()), metrics.macro_f1,
                             metrics.balanced_accuracy, lr});

    const double metric = hooks.select_on_balanced_accuracy ? metrics.balanced_accuracy : metrics.macro_f1;
    if (metric > best_metric) {
      best_metric = metric;
      report.best_epoch = epoch;
      best = model;
    } else if (epoch - report.best_epoch >= config.early_stopping_patience) {
      report.stop_reason = StopReason::kEarlyStopped;
      break;
    }
  }
  report.best_metric = best_metric;
  report.restored_best = true;
  model = std::move(best);
  return report;
}

Eigen::MatrixXd gather_columns(const Eigen::MatrixXd& m, std::span<const std::size_t> idx) {
  Eigen::MatrixXd out(m.rows(), static_cast<Eigen::Index>(idx.size()));
  for (std::size_t i = 0; i < idx.size(); ++i) out.col(static_cast<Eigen::Index>(i)) = m.col(static_cast<Eigen::Index>(idx[i]));
  return out;
}

std::vector<int> gather_labels(const std::vector<int>& labels, std::span<const std::size_t> idx) {
  std::vector<int> out(idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i) out[i] = labels[idx[i]];
  return out;
}

std::vector<int> argmax_columns(const Eigen::MatrixXd& probabilities) {
  std::vector<int> out(static_cast<std::size_t>(probabilities.cols()));
  for (Eigen::Index j = 0; j < probabilities.cols(); ++j) out[j] = argmax_class(Eigen::VectorXd(probabilities.col(j)));
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// Configuration

TrainConfig TrainConfig::defaults(int stage) {
  TrainConfig c;
  c.stage = stage;
  if (stage == 2) {
    c.epochs = 50;
    c.lr_max = 1e-3;
  }
  return c;
}

TrainConfig TrainConfig::from_key_values(const KeyValues& kv, int stage) {
  TrainConfig c = defaults(stage);
  if (kv.contains("stage") && kv.get_int("stage", stage) != stage)
    throw InvalidArgument("config declares stage " + *kv.get("stage") + " but stage " + std::to_string(stage) +
                          " is being trained");
  c.epochs = static_cast<int>(kv.get_int("epochs", c.epochs));
  c.batch_size = static_cast<int>(kv.get_int("batch_size", c.batch_size));
  c.lr_max = kv.get_double("lr_max", c.lr_max);
  c.lr_min = kv.get_double("lr_min", c.lr_min);
  c.adamw.beta1 = kv.get_double("beta1", c.adamw.beta1);
  c.adamw.beta2 = kv.get_double("beta2", c.adamw.beta2);
  c.adamw.epsilon = kv.get_double("epsilon", c.adamw.epsilon);
  c.adamw.weight_decay = kv.get_double("weight_decay", c.adamw.weight_decay);
  c.early_stopping_patience = static_cast<int>(kv.get_int("early_stopping_patience", c.early_stopping_patience));
  c.seed = static_cast<std::uint64_t>(kv.get_int("seed", static_cast<std::int64_t>(c.seed)));
  c.loss.beta = kv.get_double("beta", c.loss.beta);
  c.loss.gamma = kv.get_double("gamma", c.loss.gamma);
  c.loss.lambda = kv.get_double("lambda", c.loss.lambda);
  c.renormalize_weights = kv.get_bool("renormalize_weights", c.renormalize_weights);
  c.allow_untrained = kv.get_bool("allow_untrained", c.allow_untrained);
  c.validate();
  return c;
}

KeyValues TrainConfig::to_key_values() const {
  KeyValues kv;
  kv.set("stage", std::to_string(stage));
  kv.set("epochs", std::to_string(epochs));
  kv.set("batch_size", std::to_string(batch_size));
  kv.set("lr_max", format_double(lr_max));
  kv.set("lr_min", format_double(lr_min));
  kv.set("beta1", format_double(adamw.beta1));
  kv.set("beta2", format_double(adamw.beta2));
  kv.set("epsilon", format_double(adamw.epsilon));
  kv.set("weight_decay", format_double(adamw.weight_decay));
  kv.set("early_stopping_patience", std::to_string(early_stopping_patience));
  kv.set("seed", std::to_string(seed));
  kv.set("beta", format_double(loss.beta));
  kv.set("gamma", format_double(loss.gamma));
  kv.set("lambda", format_double(loss.lambda));
  kv.set("renormalize_weights", renormalize_weights ? "1" : "0");
  kv.set("allow_untrained", allow_untrained ? "1" : "0");
  return kv;
}

void TrainConfig::validate() const {
  if (stage != 1 && stage != 2) throw InvalidArgument("stage must be 1 or 2");
  if (epochs < 1) throw InvalidArgument("epochs must be positive");
  if (batch_size < 1) throw InvalidArgument("batch_size must be positive");
  if (!(lr_max >= 0.0) || !(lr_min >= 0.0) || lr_min > lr_max)
    throw InvalidArgument("learning rates must satisfy 0 <= lr_min <= lr_max");
  if (early_stopping_patience < 1) throw InvalidArgument("early_stopping_patience must be positive");
  if (!(adamw.beta1 >= 0.0 && adamw.beta1 < 1.0) || !(adamw.beta2 >= 0.0 && adamw.beta2 < 1.0))
    throw InvalidArgument("AdamW moment decay rates must lie in [0, 1)");
  if (!(adamw.epsilon > 0.0) || !(adamw.weight_decay >= 0.0))
    throw InvalidArgument("AdamW epsilon must be positive and weight decay nonnegative");
  loss.validate();
}

std::string TrainReport::to_csv() const {
  std::string out = "epoch,train_loss,val_macro_f1,val_balanced_accuracy,lr\n";
  for (const auto& e : epochs)
    out += std::to_string(e.epoch) + "," + format_double(e.train_loss) + "," + format_double(e.val_macro_f1) + "," +
           format_double(e.val_balanced_accuracy) + "," + format_double(e.learning_rate) + "\n";
  out += "# best_epoch=" + std::to_string(best_epoch) + "\n";
  out += "# best_metric=" + format_double(best_metric) + "\n";
  out += std::string("# stop_reason=") + (stop_reason == StopReason::kEarlyStopped ? "early_stopping" : "completed") +
         "\n";
  out += std::string("# restored_best=") + (restored_best ? "true" : "false") + "\n";
  return out;
}

// ---------------------------------------------------------------------------
// Losses over a batch

double batch_loss_and_grad(const Eigen::MatrixXd& logits, std::span<const int> labels, const LossConfig& config,
                           const ClassWeights& weights, Eigen::MatrixXd* grad) {
  const Eigen::Index batch = logits.cols();
  if (static_cast<Eigen::Index>(labels.size()) != batch)
    throw DimensionMismatch("batch has " + std::to_string(batch) + " logit columns but " +
                            std::to_string(labels.size()) + " labels");
  if (batch == 0) throw EmptyDataset("empty batch");
  if (grad) grad->resize(logits.rows(), batch);
  double total = 0.0;
  for (Eigen::Index j = 0; j < batch; ++j) {
    const Eigen::VectorXd z = logits.col(j);
    const Eigen::VectorXd p = softmax(z);
    total += hybrid_loss({p.data(), static_cast<std::size_t>(p.size())}, labels[j], config, weights);
    if (grad) grad->col(j) = hybrid_loss_grad(z, labels[j], config, weights) / static_cast<double>(batch);
  }
  return total / static_cast<double>(batch);
}

std::vector<int> predict_labels(const Model& model, const Eigen::MatrixXd& inputs) {
  return argmax_columns(forward_batch(model, inputs).probabilities);
}

// ---------------------------------------------------------------------------
// Stage 1

TrainResult train_stage1(const Dataset& train, const Dataset& validation, Model model, const TrainConfig& config) {
  config.validate();
  check_datasets(train, validation, model);
  model.backbone.frozen = false;

  const LossConfig loss = LossConfig::cross_entropy();
  const ClassWeights unit = ClassWeights::uniform(model.num_classes());
  std::vector<AdamWState> states;

  LoopHooks hooks;
  hooks.plan = [&](std::uint64_t seed) { return instance_balanced_plan(train.labels, seed); };
  hooks.run_batch = [&](std::span<const std::size_t> idx, double lr) {
    const ForwardCache cache = forward_batch(model, gather_columns(train.inputs, idx));
    const std::vector<int> labels = gather_labels(train.labels, idx);
    Eigen::MatrixXd g;
    const double mean_loss = batch_loss_and_grad(cache.logits, labels, loss, unit, &g);
    const Gradients grads = backward(model, cache, g);

    std::vector<Tensor> tensors;
    for (std::size_t l = 0; l < model.backbone.layers.size(); ++l) {
      tensors.push_back(tensor(model.backbone.layers[l].weight, grads.backbone[l].weight));
      tensors.push_back(tensor(model.backbone.layers[l].bias, grads.backbone[l].bias));
    }
    tensors.push_back(tensor(model.classifier.weight, grads.classifier_weight));
    tensors.push_back(tensor(model.classifier.bias, grads.classifier_bias));
    step_all(tensors, states, lr, config.adamw);
    return mean_loss * static_cast<double>(idx.size());
  };
  hooks.predict_validation = [&] { return predict_labels(model, validation.inputs); };
  hooks.select_on_balanced_accuracy = false;

  TrainReport report = run_epochs(model, validation, config, hooks);
  model.trained_stage = 1;
  return {std::move(model), std::move(report)};
}

// ---------------------------------------------------------------------------
// Stage 2

TrainResult train_stage2(const Dataset& train, const Dataset& validation, Model model, const TrainConfig& config) {
  config.validate();
  if (model.trained_stage < 1 && !config.allow_untrained)
    throw MissingStage1("stage 2 needs a model whose backbone was trained in stage 1");
  check_datasets(train, validation, model);

  model.backbone.frozen = true;
  model = reinit_classifier(std::move(model), derive_seed(config.seed, kReinitStream));

  const ClassCounts counts = ClassCounts::from_labels(train.labels, model.num_classes());
  const ClassWeights weights = effective_number_weights(counts, config.loss.beta, config.renormalize_weights);

  // The backbone is frozen, so embeddings are computed once.
  const Eigen::MatrixXd train_features = extract_features(model.backbone, train.inputs);
  const Eigen::MatrixXd val_features = extract_features(model.backbone, validation.inputs);
  std::vector<AdamWState> states;

  LoopHooks hooks;
  hooks.plan = [&](std::uint64_t seed) { return class_balanced_plan(train.labels, train.size(), seed); };
  hooks.run_batch = [&](std::span<const std::size_t> idx, double lr) {
    const ForwardCache cache = forward_from_features(model, gather_columns(train_features, idx));
    const std::vector<int> labels = gather_labels(train.labels, idx);
    Eigen::MatrixXd g;
    const double mean_loss = batch_loss_and_grad(cache.logits, labels, config.loss, weights, &g);
    const Gradients grads = backward(model, cache, g);
    const Tensor tensors[] = {tensor(model.classifier.weight, grads.classifier_weight),
                              tensor(model.classifier.bias, grads.classifier_bias)};
    step_all(tensors, states, lr, config.adamw);
    return mean_loss * static_cast<double>(idx.size());
  };
  hooks.predict_validation = [&] { return argmax_columns(forward_from_features(model, val_features).probabilities); };
  hooks.select_on_balanced_accuracy = true;

  TrainReport report = run_epochs(model, validation, config, hooks);
  model.trained_stage = 2;
  return {std::move(model), std::move(report)};
}

}  // namespace cbtail
