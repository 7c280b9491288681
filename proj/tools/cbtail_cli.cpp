// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The cbtail Authors
//
// Command-line front end. Exit codes: 0 success, 1 usage error, 2 data error.

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "cbtail/checkpoint.hpp"
#include "cbtail/dataio.hpp"
#include "cbtail/errors.hpp"
#include "cbtail/inference.hpp"
#include "cbtail/metrics.hpp"
#include "cbtail/rng.hpp"
#include "cbtail/stain_norm.hpp"
#include "cbtail/synthgen.hpp"
#include "cbtail/trainer.hpp"

namespace fs = std::filesystem;
using namespace cbtail;

namespace {

constexpr const char* kPrngAlgorithm = "mt19937_64/u53-lemire-boxmuller";
constexpr std::uint64_t kModelInitStream = 100;

void warn(const std::string& message) { std::cerr << "warning: " << message << "\n"; }

bool is_image_file(const fs::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext == ".png" || ext == ".ppm";
}

std::vector<fs::path> list_images(const fs::path& dir) {
  std::vector<fs::path> out;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_regular_file() && is_image_file(entry.path())) out.push_back(entry.path());
  std::sort(out.begin(), out.end());
  return out;
}

std::string join_ints(const std::vector<int>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) out += (i ? "," : "") + std::to_string(values[i]);
  return out;
}

std::vector<int> parse_ints(const std::string& text, const std::string& key) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stoi(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ParseError("key '" + key + "': '" + text + "' is not a comma-separated integer list");
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Preprocessing settings stored in config files and checkpoints

constexpr const char* kStainKeys[2][3] = {{"stain0_r", "stain0_g", "stain0_b"}, {"stain1_r", "stain1_g", "stain1_b"}};

MacenkoParams macenko_from(const KeyValues& kv) {
  MacenkoParams p;
  p.alpha_percentile = kv.get_double("alpha", p.alpha_percentile);
  p.od_threshold = kv.get_double("od_threshold", p.od_threshold);
  return p;
}

PreprocessConfig preprocess_from(const KeyValues& kv, const fs::path& config_dir) {
  PreprocessConfig p;
  p.resize_to = static_cast<int>(kv.get_int("resize_to", p.resize_to));
  p.crop_to = static_cast<int>(kv.get_int("crop_to", p.crop_to));
  p.pool_to = static_cast<int>(kv.get_int("pool_to", p.pool_to));
  p.normalize_stains = kv.get_bool("normalize_stains", p.normalize_stains);
  p.macenko = macenko_from(kv);
  const std::string fallback = kv.get("stain_fallback").value_or("pass_through");
  if (fallback == "pass_through") p.fallback = StainFallback::kPassThrough;
  else if (fallback == "fail") p.fallback = StainFallback::kFail;
  else throw ParseError("stain_fallback must be pass_through or fail, got '" + fallback + "'");

  if (kv.contains(kStainKeys[0][0])) {
    StainMatrix::Matrix m;
    for (int j = 0; j < 2; ++j)
      for (int c = 0; c < 3; ++c) m(c, j) = kv.get_double(kStainKeys[j][c], 0.0);
    p.reference = StainReference{StainMatrix(m), {kv.get_double("max_conc0", 0.0), kv.get_double("max_conc1", 0.0)}};
  } else if (auto ref = kv.get("reference")) {
    fs::path path(*ref);
    if (path.is_relative()) path = config_dir / path;
    p.reference = load_reference(path);
  }
  p.reference.validate();
  p.validate();
  return p;
}

// The resolved reference is stored inline so a checkpoint is self-contained.
void store_preprocess(const PreprocessConfig& p, KeyValues& kv) {
  kv.set("resize_to", std::to_string(p.resize_to));
  kv.set("crop_to", std::to_string(p.crop_to));
  kv.set("pool_to", std::to_string(p.pool_to));
  kv.set("normalize_stains", p.normalize_stains ? "1" : "0");
  kv.set("stain_fallback", p.fallback == StainFallback::kFail ? "fail" : "pass_through");
  kv.set("alpha", format_double(p.macenko.alpha_percentile));
  kv.set("od_threshold", format_double(p.macenko.od_threshold));
  for (int j = 0; j < 2; ++j)
    for (int c = 0; c < 3; ++c) kv.set(kStainKeys[j][c], format_double(p.reference.stains.matrix()(c, j)));
  kv.set("max_conc0", format_double(p.reference.max_concentrations[0]));
  kv.set("max_conc1", format_double(p.reference.max_concentrations[1]));
}

// ---------------------------------------------------------------------------
// Manifest -> model inputs

struct LoadedData {
  Manifest manifest;
  Dataset dataset;
  std::vector<Image> prepared;  // image manifests only
};

LoadedData load_data(const fs::path& manifest_path, const LabelSpace& labels, const PreprocessConfig& pre) {
  LoadedData out{load_manifest(manifest_path, labels), {}, {}};
  const Manifest& m = out.manifest;
  const int n = static_cast<int>(m.rows.size());
  out.dataset.labels = m.label_indices();
  out.dataset.num_classes = labels.size();
  if (m.kind == ManifestKind::kFeatures) {
    out.dataset.inputs.resize(m.feature_dim, n);
    for (int i = 0; i < n; ++i)
      for (int d = 0; d < m.feature_dim; ++d) out.dataset.inputs(d, i) = m.rows[i].features[d];
    return out;
  }
  out.dataset.inputs.resize(pre.input_dim(), n);
  for (int i = 0; i < n; ++i) {
    PreparedImage p = prepare_image(read_image(m.resolve(m.rows[i])), pre);
    if (!p.warning.empty()) warn(m.rows[i].path + ": " + p.warning);
    out.dataset.inputs.col(i) = pool_to_vector(p.image, pre.pool_to);
    out.prepared.push_back(std::move(p.image));
  }
  return out;
}

// Adds the geometric views (flips, rotations) of each training image.
Dataset augment_geometric(const Dataset& train, const std::vector<Image>& prepared,
                          const std::vector<std::size_t>& train_idx, int pool_to) {
  Dataset out = train;
  const Eigen::Index base = train.inputs.cols();
  out.inputs.conservativeResize(Eigen::NoChange, base * 6);
  for (std::size_t i = 0; i < train_idx.size(); ++i) {
    const auto views = tta_views(prepared[train_idx[i]], 6);
    for (int v = 1; v < 6; ++v) {
      out.inputs.col(base + static_cast<Eigen::Index>(i) * 5 + (v - 1)) = pool_to_vector(views[v], pool_to);
      out.labels.push_back(train.labels[i]);
    }
  }
  return out;
}

struct Split {
  Dataset train;
  Dataset validation;
};

Split split_data(const LoadedData& data, const KeyValues& kv, const PreprocessConfig& pre, std::uint64_t seed) {
  const double fraction = kv.get_double("val_fraction", 0.1);
  const auto split_seed = static_cast<std::uint64_t>(kv.get_int("split_seed", static_cast<std::int64_t>(seed)));
  const auto [train_idx, val_idx] = stratified_split(data.dataset.labels, fraction, split_seed);
  if (val_idx.empty()) throw EmptyDataset("validation split is empty; provide more samples or a larger val_fraction");
  Split s{data.dataset.subset(train_idx), data.dataset.subset(val_idx)};
  if (kv.get_bool("augment", false)) {
    if (data.prepared.empty()) warn("augment ignored for feature manifests");
    else s.train = augment_geometric(s.train, data.prepared, train_idx, pre.pool_to);
  }
  return s;
}

fs::path report_path(const fs::path& checkpoint) {
  fs::path p = checkpoint;
  p.replace_extension(".report.csv");
  return p;
}

// Keys that describe data handling; stage 2 inherits them from stage 1.
const std::vector<std::string> kDataKeys = {"resize_to", "crop_to", "pool_to", "normalize_stains", "stain_fallback",
                                            "alpha", "od_threshold", "stain0_r", "stain0_g", "stain0_b",
                                            "stain1_r", "stain1_g", "stain1_b", "max_conc0", "max_conc1",
                                            "val_fraction", "split_seed", "augment", "hidden_widths"};

KeyValues data_keys(const KeyValues& kv) {
  KeyValues out;
  for (const auto& key : kDataKeys)
    if (auto v = kv.get(key)) out.set(key, *v);
  return out;
}

void merge_into(KeyValues& dst, const KeyValues& src) {
  for (const auto& [k, v] : src.entries()) dst.set(k, v);
}

void print_report_summary(const TrainReport& r, const char* metric) {
  std::cout << "epochs " << r.epochs.size() << ", best epoch " << r.best_epoch << " (" << metric << " "
            << format_double(r.best_metric) << "), "
            << (r.stop_reason == StopReason::kEarlyStopped ? "early stop" : "completed") << "\n";
}

// ---------------------------------------------------------------------------
// Subcommands

struct NormalizeArgs {
  std::string in, out, reference;
  double alpha = 1.0, od_threshold = 0.15;
  bool strict = false;
};

int run_normalize(const NormalizeArgs& a) {
  StainReference ref = a.reference.empty() ? StainReference::standard() : load_reference(a.reference);
  MacenkoParams params;
  params.alpha_percentile = a.alpha;
  params.od_threshold = a.od_threshold;

  std::vector<std::pair<fs::path, fs::path>> jobs;
  if (fs::is_directory(a.in)) {
    fs::create_directories(a.out);
    for (const auto& p : list_images(a.in)) jobs.emplace_back(p, fs::path(a.out) / p.filename());
  } else {
    if (!fs::exists(a.in)) throw MissingFile("input " + a.in + " does not exist");
    jobs.emplace_back(a.in, a.out);
  }
  int passed_through = 0;
  for (const auto& [src, dst] : jobs) {
    const Image image = read_image(src);
    Image result;
    try {
      result = normalize_image(image, ref, params);
    } catch (const DegenerateStains& e) {
      if (a.strict) throw;
      warn(src.string() + ": " + e.what() + "; copied unmodified");
      result = image;
      ++passed_through;
    } catch (const TooFewPixels& e) {
      if (a.strict) throw;
      warn(src.string() + ": " + e.what() + "; copied unmodified");
      result = image;
      ++passed_through;
    }
    write_image(result, dst);
  }
  std::cout << "normalized " << jobs.size() - passed_through << " of " << jobs.size() << " images\n";
  return 0;
}

int run_fit_reference(const std::string& in, const std::string& out, double alpha, double od_threshold) {
  MacenkoParams params;
  params.alpha_percentile = alpha;
  params.od_threshold = od_threshold;
  std::vector<Image> images;
  for (const auto& p : list_images(in)) images.push_back(read_image(p));
  if (images.empty()) throw MissingFile("no .png or .ppm images in " + in);
  const StainReference ref = fit_reference(images, params);
  save_reference(ref, out);
  std::cout << "fitted reference from " << images.size() << " images\n";
  return 0;
}

struct SynthStainsArgs {
  std::string out;
  int n = 10, size = 64;
  std::uint64_t seed = 0;
  double max_degrees = 10.0, max_concentration = 1.0;
};

int run_synth_stains(const SynthStainsArgs& a) {
  fs::create_directories(a.out);
  std::string truth = "file";
  for (int j = 0; j < 2; ++j)
    for (int c = 0; c < 3; ++c) truth += std::string(",") + kStainKeys[j][c];
  truth += "\n";
  char name[32];
  for (int i = 0; i < a.n; ++i) {
    SynthStainSpec spec;
    spec.stains = perturbed_stain_matrix(derive_seed(a.seed, 2 * i), a.max_degrees);
    spec.max_concentration = {a.max_concentration, a.max_concentration};
    spec.width = spec.height = a.size;
    spec.seed = derive_seed(a.seed, 2 * i + 1);
    std::snprintf(name, sizeof name, "stain_%04d.png", i);
    write_png(synth_stained_image(spec).image, fs::path(a.out) / name);
    truth += name;
    for (int j = 0; j < 2; ++j)
      for (int c = 0; c < 3; ++c) truth += "," + format_double(spec.stains.matrix()(c, j));
    truth += "\n";
  }
  atomic_write(fs::path(a.out) / "truth.csv", truth);
  std::cout << "wrote " << a.n << " images to " << a.out << "\n";
  return 0;
}

struct SynthBlobsArgs {
  std::string out;
  std::vector<std::int64_t> counts{2000, 600, 180, 54, 16};
  std::uint64_t seed = 0;
  int dim = 8;
  double separation = 3.5, spread = 1.0;
  std::int64_t test_per_class = 100;
};

int run_synth_blobs(const SynthBlobsArgs& a) {
  const int c = static_cast<int>(a.counts.size());
  if (a.dim < c) throw InvalidArgument("--dim must be at least the number of classes");
  SynthBlobSpec spec;
  spec.centers = Eigen::MatrixXd::Zero(a.dim, c);
  for (int j = 0; j < c; ++j) spec.centers(j, j) = a.separation;
  spec.spreads.assign(c, a.spread);
  spec.counts = a.counts;
  spec.seed = derive_seed(a.seed, 0);

  std::vector<std::string> names;
  for (int j = 0; j < c; ++j) names.push_back("class" + std::to_string(j));
  const LabelSpace labels(names);
  fs::create_directories(a.out);
  save_label_space(labels, fs::path(a.out) / "labels.txt");

  auto write = [&](const SynthBlobs& blobs, const std::string& prefix, const fs::path& file) {
    std::vector<std::string> ids;
    char id[48];
    for (std::size_t i = 0; i < blobs.labels.size(); ++i) {
      std::snprintf(id, sizeof id, "%s%06zu", prefix.c_str(), i);
      ids.push_back(id);
    }
    write_feature_manifest(file, labels, ids, blobs.labels, blobs.features);
  };
  write(synth_blobs(spec), "train", fs::path(a.out) / "train.csv");

  SynthBlobSpec test = spec;
  test.counts.assign(c, a.test_per_class);
  test.seed = derive_seed(a.seed, 1);
  write(synth_blobs(test), "test", fs::path(a.out) / "test.csv");
  std::cout << "wrote labels.txt, train.csv, test.csv to " << a.out << "\n";
  return 0;
}

struct TrainArgs {
  std::string manifest, out, config, labels, init;
  std::optional<std::uint64_t> seed;
  std::optional<double> beta, gamma, lambda;
};

int run_train_stage1(const TrainArgs& a) {
  KeyValues kv = a.config.empty() ? KeyValues{} : KeyValues::load(a.config);
  if (a.seed) kv.set("seed", std::to_string(*a.seed));
  const TrainConfig config = TrainConfig::from_key_values(kv, 1);
  const fs::path config_dir = a.config.empty() ? fs::path(".") : fs::path(a.config).parent_path();
  const PreprocessConfig pre = preprocess_from(kv, config_dir);
  const fs::path labels_path = a.labels.empty() ? fs::path(a.manifest).parent_path() / "labels.txt" : fs::path(a.labels);
  const LabelSpace labels = load_label_space(labels_path);

  const LoadedData data = load_data(a.manifest, labels, pre);
  if (data.dataset.size() == 0) throw EmptyDataset("manifest " + a.manifest + " has no rows");
  const Split split = split_data(data, kv, pre, config.seed);

  ModelShape shape;
  shape.input_dim = data.dataset.input_dim();
  shape.num_classes = labels.size();
  if (auto widths = kv.get("hidden_widths")) shape.hidden_widths = parse_ints(*widths, "hidden_widths");
  Model model = Model::create(shape, derive_seed(config.seed, kModelInitStream));

  TrainResult result = train_stage1(split.train, split.validation, std::move(model), config);

  Checkpoint ck;
  ck.model = std::move(result.model);
  ck.seed = config.seed;
  ck.prng_algorithm = kPrngAlgorithm;
  ck.config = config.to_key_values();
  KeyValues data_kv = data_keys(kv);
  store_preprocess(pre, data_kv);
  data_kv.set("hidden_widths", join_ints(shape.hidden_widths));
  data_kv.set("val_fraction", format_double(kv.get_double("val_fraction", 0.1)));
  data_kv.set("split_seed", std::to_string(kv.get_int("split_seed", static_cast<std::int64_t>(config.seed))));
  data_kv.set("input_kind", data.manifest.kind == ManifestKind::kFeatures ? "features" : "images");
  merge_into(ck.config, data_kv);
  ck.labels = labels;
  save_checkpoint(ck, a.out);
  atomic_write(report_path(a.out), result.report.to_csv());
  print_report_summary(result.report, "val macro-F1");
  return 0;
}

int run_train_stage2(const TrainArgs& a) {
  const Checkpoint init = load_checkpoint(a.init);
  KeyValues kv = a.config.empty() ? KeyValues{} : KeyValues::load(a.config);
  if (a.seed) kv.set("seed", std::to_string(*a.seed));
  if (a.beta) kv.set("beta", format_double(*a.beta));
  if (a.gamma) kv.set("gamma", format_double(*a.gamma));
  if (a.lambda) kv.set("lambda", format_double(*a.lambda));
  const TrainConfig config = TrainConfig::from_key_values(kv, 2);

  // Preprocessing and the validation split come from the stage-1 run.
  const KeyValues data_kv = data_keys(init.config);
  const PreprocessConfig pre = preprocess_from(data_kv, ".");
  const LoadedData data = load_data(a.manifest, init.labels, pre);
  if (data.dataset.size() == 0) throw EmptyDataset("manifest " + a.manifest + " has no rows");
  const Split split = split_data(data, data_kv, pre, init.seed);

  TrainResult result = train_stage2(split.train, split.validation, init.model, config);

  Checkpoint ck;
  ck.model = std::move(result.model);
  ck.seed = config.seed;
  ck.prng_algorithm = kPrngAlgorithm;
  ck.config = config.to_key_values();
  merge_into(ck.config, data_kv);
  if (auto kind = init.config.get("input_kind")) ck.config.set("input_kind", *kind);
  ck.parent_sha256 = sha256_hex(read_file(a.init));
  ck.labels = init.labels;
  save_checkpoint(ck, a.out);
  atomic_write(report_path(a.out), result.report.to_csv());
  print_report_summary(result.report, "val balanced accuracy");
  return 0;
}

struct InferArgs {
  std::string manifest, out, labels;
  std::vector<std::string> models;
  int k = 8;
};

int run_infer(const InferArgs& a) {
  std::vector<Model> models;
  std::vector<Checkpoint> checkpoints;
  for (const auto& path : a.models) checkpoints.push_back(load_checkpoint(path));
  const LabelSpace labels = a.labels.empty() ? checkpoints.front().labels : load_label_space(a.labels);
  for (const auto& ck : checkpoints) {
    if (ck.labels.names() != labels.names())
      throw ModelDimensionMismatch("models disagree on the label space");
    models.push_back(ck.model);
  }
  const PreprocessConfig pre = preprocess_from(data_keys(checkpoints.front().config), ".");
  const Manifest manifest = load_manifest(a.manifest, labels);
  const bool features = manifest.kind == ManifestKind::kFeatures;
  if (features && a.k > 1) warn("feature manifests have no image views; using the identity view only");

  std::string csv = "path,predicted_label";
  for (int c = 0; c < labels.size(); ++c) csv += ",p_" + std::to_string(c);
  csv += "\n";
  char buf[32];
  for (const auto& row : manifest.rows) {
    Eigen::VectorXd p;
    if (features) {
      const std::vector<Eigen::VectorXd> view{Eigen::Map<const Eigen::VectorXd>(row.features.data(),
                                                                                 static_cast<Eigen::Index>(row.features.size()))};
      p = ensemble_predict(models, view);
    } else {
      const PreparedImage prepared = prepare_image(read_image(manifest.resolve(row)), pre);
      if (!prepared.warning.empty()) warn(row.path + ": " + prepared.warning);
      std::vector<Eigen::VectorXd> views;
      for (const Image& v : tta_views(prepared.image, a.k)) views.push_back(pool_to_vector(v, pre.pool_to));
      p = ensemble_predict(models, views);
    }
    csv += row.path + "," + labels.name(argmax_class(p));
    for (Eigen::Index c = 0; c < p.size(); ++c) {
      std::snprintf(buf, sizeof buf, ",%.6f", p[c]);
      csv += buf;
    }
    csv += "\n";
  }
  atomic_write(a.out, csv);
  std::cout << "wrote " << manifest.rows.size() << " predictions to " << a.out << "\n";
  return 0;
}

double round4(double v) { return std::round(v * 1e4) / 1e4; }

int run_evaluate(const std::string& predictions, const std::string& truth, const std::string& labels_path,
                 const std::string& out) {
  const LabelSpace labels = load_label_space(labels_path);
  const Manifest truth_manifest = load_manifest(truth, labels);

  std::map<std::string, int> predicted;
  std::istringstream in(read_file(predictions));
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line_no == 1) {
      if (line.rfind("path,predicted_label", 0) != 0)
        throw ParseError(predictions + ":1: expected header starting with `path,predicted_label`");
      continue;
    }
    if (line.empty()) continue;
    const auto c1 = line.find(',');
    const auto c2 = c1 == std::string::npos ? std::string::npos : line.find(',', c1 + 1);
    if (c1 == std::string::npos)
      throw ParseError(predictions + ":" + std::to_string(line_no) + ": expected `path,predicted_label,...`");
    const std::string path = line.substr(0, c1);
    const std::string name = line.substr(c1 + 1, c2 == std::string::npos ? std::string::npos : c2 - c1 - 1);
    const auto label = labels.find(name);
    if (!label) throw UnknownLabel(predictions + ":" + std::to_string(line_no) + ": unknown label '" + name + "'");
    if (!predicted.emplace(path, *label).second)
      throw ParseError(predictions + ":" + std::to_string(line_no) + ": duplicate path '" + path + "'");
  }

  std::vector<int> preds, truths;
  for (const auto& row : truth_manifest.rows) {
    const auto it = predicted.find(row.path);
    if (it == predicted.end()) throw MissingFile("no prediction for '" + row.path + "'");
    preds.push_back(it->second);
    truths.push_back(row.label);
  }
  const ConfusionMatrix cm = confusion(preds, truths, labels.size());
  const MetricsReport r = compute_metrics(cm);

  nlohmann::ordered_json j;
  j["num_samples"] = cm.total();
  j["macro_f1"] = round4(r.macro_f1);
  j["balanced_accuracy"] = round4(r.balanced_accuracy);
  j["macro_precision"] = round4(r.macro_precision);
  j["macro_specificity"] = round4(r.macro_specificity);
  j["accuracy"] = round4(r.accuracy);
  j["per_class"] = nlohmann::ordered_json::array();
  for (int c = 0; c < labels.size(); ++c) {
    nlohmann::ordered_json pc;
    pc["label"] = labels.name(c);
    pc["support"] = cm.row_sum(c);
    pc["precision"] = round4(r.precision[c]);
    pc["recall"] = round4(r.recall[c]);
    pc["specificity"] = round4(r.specificity[c]);
    pc["f1"] = round4(r.f1[c]);
    j["per_class"].push_back(pc);
  }
  j["labels"] = labels.names();
  auto rows = nlohmann::ordered_json::array();
  for (int t = 0; t < labels.size(); ++t) {
    auto row = nlohmann::ordered_json::array();
    for (int p = 0; p < labels.size(); ++p) row.push_back(cm(t, p));
    rows.push_back(row);
  }
  j["confusion_matrix"] = rows;
  atomic_write(out, j.dump(2) + "\n");
  std::cout << "macro_f1 " << round4(r.macro_f1) << "  balanced_accuracy " << round4(r.balanced_accuracy)
            << "  macro_precision " << round4(r.macro_precision) << "  macro_specificity "
            << round4(r.macro_specificity) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Long-tailed classification pipeline: stain normalization, two-stage training, ensemble inference"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "cbtail 0.1.0");

  NormalizeArgs norm;
  auto* normalize = app.add_subcommand("normalize", "Macenko-normalize an image or a directory of images");
  normalize->add_option("--in", norm.in, "Input image or directory")->required();
  normalize->add_option("--out", norm.out, "Output image or directory")->required();
  normalize->add_option("--alpha", norm.alpha, "Extreme-angle percentile")->check(CLI::Range(0.0, 50.0, "(0,50)"));
  normalize->add_option("--od-threshold", norm.od_threshold, "Minimum optical density per channel")
      ->check(CLI::NonNegativeNumber);
  normalize->add_option("--reference", norm.reference, "Stain reference file (default: standard H&E)")
      ->check(CLI::ExistingFile);
  normalize->add_flag("--strict", norm.strict, "Fail instead of copying images that cannot be stain-separated");

  std::string fit_in, fit_out;
  double fit_alpha = 1.0, fit_threshold = 0.15;
  auto* fit = app.add_subcommand("fit-reference", "Average stain matrices and maxima over a directory");
  fit->add_option("--in", fit_in, "Directory of images")->required()->check(CLI::ExistingDirectory);
  fit->add_option("--out", fit_out, "Reference file to write")->required();
  fit->add_option("--alpha", fit_alpha, "Extreme-angle percentile")->check(CLI::Range(0.0, 50.0, "(0,50)"));
  fit->add_option("--od-threshold", fit_threshold, "Minimum optical density")->check(CLI::NonNegativeNumber);

  auto* synth = app.add_subcommand("synth", "Generate synthetic data");
  synth->require_subcommand(1);
  SynthStainsArgs stains;
  auto* synth_stains = synth->add_subcommand("stains", "Beer-Lambert stained images with known stain matrices");
  synth_stains->add_option("--out", stains.out, "Output directory")->required();
  synth_stains->add_option("--n", stains.n, "Number of images")->check(CLI::PositiveNumber);
  synth_stains->add_option("--seed", stains.seed, "Random seed");
  synth_stains->add_option("--size", stains.size, "Image side length")->check(CLI::PositiveNumber);
  synth_stains->add_option("--max-degrees", stains.max_degrees, "Stain perturbation angle")
      ->check(CLI::Range(0.0, 45.0));
  synth_stains->add_option("--max-concentration", stains.max_concentration, "Upper concentration bound")
      ->check(CLI::NonNegativeNumber);
  SynthBlobsArgs blobs;
  auto* synth_blobs_cmd = synth->add_subcommand("blobs", "Long-tailed Gaussian blobs as feature manifests");
  synth_blobs_cmd->add_option("--out", blobs.out, "Output directory")->required();
  synth_blobs_cmd->add_option("--counts", blobs.counts, "Per-class training counts")->delimiter(',');
  synth_blobs_cmd->add_option("--seed", blobs.seed, "Random seed");
  synth_blobs_cmd->add_option("--dim", blobs.dim, "Feature dimension")->check(CLI::PositiveNumber);
  synth_blobs_cmd->add_option("--separation", blobs.separation, "Center offset along each class axis");
  synth_blobs_cmd->add_option("--spread", blobs.spread, "Gaussian standard deviation")->check(CLI::NonNegativeNumber);
  synth_blobs_cmd->add_option("--test-per-class", blobs.test_per_class, "Balanced test samples per class")
      ->check(CLI::PositiveNumber);

  TrainArgs s1;
  auto* stage1 = app.add_subcommand("train-stage1", "End-to-end training with instance-balanced sampling");
  stage1->add_option("--manifest", s1.manifest, "Training manifest")->required()->check(CLI::ExistingFile);
  stage1->add_option("--out", s1.out, "Checkpoint to write")->required();
  stage1->add_option("--config", s1.config, "Key-value config file")->check(CLI::ExistingFile);
  stage1->add_option("--labels", s1.labels, "Label-space file (default: labels.txt next to the manifest)")
      ->check(CLI::ExistingFile);
  stage1->add_option("--seed", s1.seed, "Seed (overrides the config)");

  TrainArgs s2;
  auto* stage2 = app.add_subcommand("train-stage2", "Classifier retraining with class-balanced sampling");
  stage2->add_option("--manifest", s2.manifest, "Training manifest")->required()->check(CLI::ExistingFile);
  stage2->add_option("--init", s2.init, "Stage-1 checkpoint")->required()->check(CLI::ExistingFile);
  stage2->add_option("--out", s2.out, "Checkpoint to write")->required();
  stage2->add_option("--config", s2.config, "Key-value config file")->check(CLI::ExistingFile);
  stage2->add_option("--seed", s2.seed, "Seed (overrides the config)");
  stage2->add_option("--beta", s2.beta, "Effective-number beta")->check(CLI::Range(0.0, 1.0));
  stage2->add_option("--gamma", s2.gamma, "Focal focusing parameter")->check(CLI::NonNegativeNumber);
  stage2->add_option("--lambda", s2.lambda, "Focal mixing weight")->check(CLI::Range(0.0, 1.0));

  InferArgs inf;
  auto* infer = app.add_subcommand("infer", "Ensemble prediction with test-time augmentation");
  infer->add_option("--manifest", inf.manifest, "Manifest of inputs")->required()->check(CLI::ExistingFile);
  infer->add_option("--models", inf.models, "Comma-separated checkpoints")
      ->required()
      ->delimiter(',')
      ->check(CLI::ExistingFile);
  infer->add_option("--k", inf.k, "Number of test-time views")->check(CLI::Range(1, kMaxTtaViews));
  infer->add_option("--labels", inf.labels, "Label-space file (default: from the first checkpoint)")
      ->check(CLI::ExistingFile);
  infer->add_option("--out", inf.out, "Predictions CSV to write")->required();

  std::string eval_pred, eval_truth, eval_labels, eval_out;
  auto* evaluate = app.add_subcommand("evaluate", "Metrics for a predictions file");
  evaluate->add_option("--predictions", eval_pred, "Predictions CSV")->required()->check(CLI::ExistingFile);
  evaluate->add_option("--truth", eval_truth, "Manifest with true labels")->required()->check(CLI::ExistingFile);
  evaluate->add_option("--labels", eval_labels, "Label-space file")->required()->check(CLI::ExistingFile);
  evaluate->add_option("--out", eval_out, "metrics.json to write")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*normalize) return run_normalize(norm);
    if (*fit) return run_fit_reference(fit_in, fit_out, fit_alpha, fit_threshold);
    if (*synth_stains) return run_synth_stains(stains);
    if (*synth_blobs_cmd) return run_synth_blobs(blobs);
    if (*stage1) return run_train_stage1(s1);
    if (*stage2) return run_train_stage2(s2);
    if (*infer) return run_infer(inf);
    if (*evaluate) return run_evaluate(eval_pred, eval_truth, eval_labels, eval_out);
  } catch (const cbtail::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
