// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The cbtail Authors

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "cbtail/image.hpp"
#include "cbtail/stain_norm.hpp"

namespace cbtail {

/// Ordered class names; the position of a name is its class index.
class LabelSpace {
 public:
  LabelSpace() = default;
  explicit LabelSpace(std::vector<std::string> names);

  int size() const { return static_cast<int>(names_.size()); }
  const std::string& name(int index) const { return names_.at(index); }
  const std::vector<std::string>& names() const { return names_; }
  std::optional<int> find(const std::string& name) const;

 private:
  std::vector<std::string> names_;
  std::map<std::string, int> index_;
};

/// One class name per line; blank lines ignored.
LabelSpace load_label_space(const std::filesystem::path& path);
void save_label_space(const LabelSpace& labels, const std::filesystem::path& path);

enum class ManifestKind { kImages, kFeatures };

struct ManifestRow {
  std::string path;  // as written in the file; image rows resolve it against the manifest dir
  int label = 0;
  std::vector<double> features;  // feature manifests only
};

/// Image manifest: CSV header `path,label`; paths relative to the manifest directory.
/// Feature manifest: first line `#features dim=<d>`, then header
/// `path,label,x0,...,x<d-1>`; `path` is a sample identifier.
struct Manifest {
  ManifestKind kind = ManifestKind::kImages;
  std::filesystem::path base_dir;
  LabelSpace labels;
  int feature_dim = 0;
  std::vector<ManifestRow> rows;

  std::filesystem::path resolve(const ManifestRow& row) const { return base_dir / row.path; }
  std::vector<int> label_indices() const;
};

/// Throws ParseError (with line number), UnknownLabel, MissingFile.
Manifest load_manifest(const std::filesystem::path& path, const LabelSpace& labels);

/// Writes a feature manifest; values printed with 17 significant digits.
void write_feature_manifest(const std::filesystem::path& path, const LabelSpace& labels,
                            std::span<const std::string> ids, std::span<const int> label_indices,
                            const Eigen::MatrixXd& features);

enum class StainFallback { kPassThrough, kFail };

struct PreprocessConfig {
  int resize_to = 368;  // 0 disables
  int crop_to = 224;    // 0 disables
  int pool_to = 8;
  bool normalize_stains = true;
  StainReference reference = StainReference::standard();
  MacenkoParams macenko;
  StainFallback fallback = StainFallback::kPassThrough;

  int input_dim() const { return 3 * pool_to * pool_to; }
  void validate() const;
};

struct PreparedImage {
  Image image;
  bool stain_normalized = false;
  std::string warning;  // set when the pass-through fallback fired
};

/// Stain normalization (optional), bilinear resize, center crop.
PreparedImage prepare_image(const Image& image, const PreprocessConfig& config);
/// Block-average to pool_to x pool_to per channel, scale to [0,1], flatten channel-major.
Eigen::VectorXd pool_to_vector(const Image& image, int pool_to);
/// prepare_image followed by pool_to_vector.
Eigen::VectorXd preprocess(const Image& image, const PreprocessConfig& config,
                           std::string* warning = nullptr);

/// Inputs stored column-wise.
struct Dataset {
  Eigen::MatrixXd inputs;
  std::vector<int> labels;
  int num_classes = 0;

  std::size_t size() const { return labels.size(); }
  int input_dim() const { return static_cast<int>(inputs.rows()); }
  Dataset subset(std::span<const std::size_t> indices) const;
};

/// Per class, a seeded shuffle moves max(1, floor(fraction * n_j)) samples to
/// validation; classes with a single sample stay in training.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> stratified_split(
    std::span<const int> labels, double fraction, std::uint64_t seed);

/// Flat `key = value` file; `#` starts a comment. Keys keep file order.
class KeyValues {
 public:
  static KeyValues parse(const std::string& text, const std::string& source = "<string>");
  static KeyValues load(const std::filesystem::path& path);

  bool contains(const std::string& key) const;
  std::optional<std::string> get(const std::string& key) const;
  void set(const std::string& key, std::string value);
  const std::vector<std::pair<std::string, std::string>>& entries() const { return entries_; }
  std::string to_string() const;

  double get_double(const std::string& key, double fallback) const;
  std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
};

/// Formats a double so it parses back bit-identically.
std::string format_double(double value);

/// Reference file keys: stain0_r, stain0_g, stain0_b, stain1_r, stain1_g,
/// stain1_b, max_conc0, max_conc1.
StainReference load_reference(const std::filesystem::path& path);
void save_reference(const StainReference& reference, const std::filesystem::path& path);

/// Writes through a sibling temp file and renames it into place.
void atomic_write(const std::filesystem::path& path, const std::string& bytes);
std::string read_file(const std::filesystem::path& path);
/// Lowercase hex SHA-256.
std::string sha256_hex(const std::string& bytes);

}  // namespace cbtail
