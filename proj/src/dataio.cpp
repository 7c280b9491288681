// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The cbtail Authors

#include "cbtail/dataio.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <openssl/evp.h>

#include "cbtail/errors.hpp"
#include "cbtail/rng.hpp"

namespace cbtail {

namespace fs = std::filesystem;

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    fields.push_back(trim(std::string_view(line).substr(start, comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return fields;
}

double parse_double(const std::string& text, const std::string& where) {
  double value = 0.0;
  const char* begin = text.data();
  const char* end = begin + text.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end || text.empty())
    throw ParseError(where + ": '" + text + "' is not a number");
  return value;
}

std::int64_t parse_int(const std::string& text, const std::string& where) {
  std::int64_t value = 0;
  const char* begin = text.data();
  const char* end = begin + text.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end || text.empty())
    throw ParseError(where + ": '" + text + "' is not an integer");
  return value;
}

}  // namespace

// ---------------------------------------------------------------------------
// Label space

LabelSpace::LabelSpace(std::vector<std::string> names) : names_(std::move(names)) {
  for (std::size_t i = 0; i < names_.size(); ++i) {
    if (names_[i].empty()) throw ParseError("empty class name at position " + std::to_string(i));
    if (!index_.emplace(names_[i], static_cast<int>(i)).second)
      throw ParseError("duplicate class name '" + names_[i] + "'");
  }
}

std::optional<int> LabelSpace::find(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

LabelSpace load_label_space(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw MissingFile("cannot open label space " + path.string());
  std::vector<std::string> names;
  std::string line;
  while (std::getline(in, line)) {
    std::string name = trim(line);
    if (!name.empty()) names.push_back(std::move(name));
  }
  return LabelSpace(std::move(names));
}

void save_label_space(const LabelSpace& labels, const fs::path& path) {
  std::string text;
  for (const auto& name : labels.names()) text += name + "\n";
  atomic_write(path, text);
}

// ---------------------------------------------------------------------------
// Manifests

std::vector<int> Manifest::label_indices() const {
  std::vector<int> out(rows.size());
  std::transform(rows.begin(), rows.end(), out.begin(), [](const ManifestRow& r) { return r.label; });
  return out;
}

Manifest load_manifest(const fs::path& path, const LabelSpace& labels) {
  std::ifstream in(path);
  if (!in) throw MissingFile("cannot open manifest " + path.string());
  Manifest manifest;
  manifest.base_dir = path.parent_path();
  manifest.labels = labels;

  const std::string name = path.string();
  std::string line;
  int line_no = 0;
  auto where = [&] { return name + ":" + std::to_string(line_no); };

  auto next_line = [&]() -> bool {
    while (std::getline(in, line)) {
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (!trim(line).empty()) return true;
    }
    return false;
  };

  if (!next_line()) throw ParseError(name + ": empty file, expected a `path,label` header");
  if (line.rfind("#features", 0) == 0) {
    manifest.kind = ManifestKind::kFeatures;
    const auto eq = line.find("dim=");
    if (eq == std::string::npos) throw ParseError(where() + ": feature manifest needs `dim=<d>`");
    manifest.feature_dim = static_cast<int>(parse_int(trim(line.substr(eq + 4)), where()));
    if (manifest.feature_dim < 1) throw ParseError(where() + ": dim must be positive");
    if (!next_line()) throw ParseError(where() + ": missing header line");
  }

  const auto header = split_csv(line);
  const std::size_t expected_fields =
      manifest.kind == ManifestKind::kFeatures ? 2 + static_cast<std::size_t>(manifest.feature_dim) : 2;
  if (header.size() != expected_fields || header[0] != "path" || header[1] != "label")
    throw ParseError(where() + ": expected header `path,label" +
                     std::string(manifest.kind == ManifestKind::kFeatures ? ",x0,...`" : "`"));

  while (next_line()) {
    const auto fields = split_csv(line);
    if (fields.size() != expected_fields)
      throw ParseError(where() + ": expected " + std::to_string(expected_fields) + " fields, found " +
                       std::to_string(fields.size()) + " (paths may not contain commas)");
    ManifestRow row;
    row.path = fields[0];
    if (row.path.empty()) throw ParseError(where() + ": empty path");
    const auto label = labels.find(fields[1]);
    if (!label) throw UnknownLabel(where() + ": unknown label '" + fields[1] + "'");
    row.label = *label;
    if (manifest.kind == ManifestKind::kFeatures) {
      row.features.reserve(manifest.feature_dim);
      for (std::size_t k = 2; k < fields.size(); ++k) row.features.push_back(parse_double(fields[k], where()));
    } else if (!fs::exists(manifest.resolve(row))) {
      throw MissingFile(where() + ": image '" + manifest.resolve(row).string() + "' does not exist");
    }
    manifest.rows.push_back(std::move(row));
  }
  return manifest;
}

std::string format_double(double value) {
  char buf[32];
  const int n = std::snprintf(buf, sizeof buf, "%.17g", value);
  return std::string(buf, n);
}

void write_feature_manifest(const fs::path& path, const LabelSpace& labels, std::span<const std::string> ids,
                            std::span<const int> label_indices, const Eigen::MatrixXd& features) {
  if (ids.size() != label_indices.size() || static_cast<Eigen::Index>(ids.size()) != features.cols())
    throw LengthMismatch("feature manifest columns disagree in length");
  std::ostringstream out;
  out << "#features dim=" << features.rows() << "\n" << "path,label";
  for (Eigen::Index k = 0; k < features.rows(); ++k) out << ",x" << k;
  out << "\n";
  for (std::size_t i = 0; i < ids.size(); ++i) {
    out << ids[i] << "," << labels.name(label_indices[i]);
    for (Eigen::Index k = 0; k < features.rows(); ++k) out << "," << format_double(features(k, i));
    out << "\n";
  }
  atomic_write(path, out.str());
}

// ---------------------------------------------------------------------------
// Preprocessing

void PreprocessConfig::validate() const {
  if (resize_to < 0 || crop_to < 0) throw InvalidArgument("resize/crop sizes must be nonnegative");
  if (resize_to > 0 && crop_to > resize_to) throw InvalidArgument("crop_to must not exceed resize_to");
  if (pool_to < 1) throw InvalidArgument("pool_to must be positive");
  if (normalize_stains) reference.validate();
}

PreparedImage prepare_image(const Image& image, const PreprocessConfig& config) {
  config.validate();
  if (image.empty()) throw InvalidArgument("cannot preprocess an empty image");
  PreparedImage out{image, false, {}};
  if (config.resize_to > 0) out.image = resize_bilinear(out.image, config.resize_to, config.resize_to);
  if (config.crop_to > 0) out.image = center_crop(out.image, config.crop_to, config.crop_to);
  if (config.normalize_stains) {
    try {
      out.image = normalize_image(out.image, config.reference, config.macenko);
      out.stain_normalized = true;
    } catch (const DegenerateStains& e) {
      if (config.fallback == StainFallback::kFail) throw;
      out.warning = std::string("stain normalization skipped: ") + e.what();
    } catch (const TooFewPixels& e) {
      if (config.fallback == StainFallback::kFail) throw;
      out.warning = std::string("stain normalization skipped: ") + e.what();
    }
  }
  return out;
}

Eigen::VectorXd pool_to_vector(const Image& image, int pool_to) {
  if (pool_to < 1 || pool_to > image.width() || pool_to > image.height())
    throw InvalidArgument("pool size " + std::to_string(pool_to) + " does not fit the image");
  const int p = pool_to;
  Eigen::VectorXd out(3 * p * p);
  for (int by = 0; by < p; ++by) {
    const int y0 = by * image.height() / p, y1 = (by + 1) * image.height() / p;
    for (int bx = 0; bx < p; ++bx) {
      const int x0 = bx * image.width() / p, x1 = (bx + 1) * image.width() / p;
      const double n = static_cast<double>(y1 - y0) * (x1 - x0);
      for (int c = 0; c < 3; ++c) {
        std::int64_t sum = 0;
        for (int y = y0; y < y1; ++y)
          for (int x = x0; x < x1; ++x) sum += image.at(x, y, c);
        out[c * p * p + by * p + bx] = static_cast<double>(sum) / n / 255.0;
      }
    }
  }
  return out;
}

Eigen::VectorXd preprocess(const Image& image, const PreprocessConfig& config, std::string* warning) {
  PreparedImage prepared = prepare_image(image, config);
  if (warning) *warning = prepared.warning;
  return pool_to_vector(prepared.image, config.pool_to);
}

// ---------------------------------------------------------------------------
// Datasets

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  Dataset out;
  out.num_classes = num_classes;
  out.inputs.resize(inputs.rows(), static_cast<Eigen::Index>(indices.size()));
  out.labels.reserve(indices.size());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    out.inputs.col(static_cast<Eigen::Index>(i)) = inputs.col(static_cast<Eigen::Index>(indices[i]));
    out.labels.push_back(labels.at(indices[i]));
  }
  return out;
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> stratified_split(std::span<const int> labels,
                                                                             double fraction,
                                                                             std::uint64_t seed) {
  if (!(fraction >= 0.0 && fraction < 1.0)) throw InvalidArgument("validation fraction must lie in [0, 1)");
  int num_classes = 0;
  for (int y : labels) {
    if (y < 0) throw LabelOutOfRange("negative label");
    num_classes = std::max(num_classes, y + 1);
  }
  std::vector<std::vector<std::size_t>> by_class(num_classes);
  for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);

  std::vector<std::size_t> train, val;
  for (int j = 0; j < num_classes; ++j) {
    auto& members = by_class[j];
    if (members.empty()) continue;
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(j)));
    for (std::size_t i = members.size() - 1; i > 0; --i) std::swap(members[i], members[rng.below(i + 1)]);
    std::size_t n_val = 0;
    if (fraction > 0.0 && members.size() > 1)
      n_val = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(fraction * members.size())));
    val.insert(val.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(n_val));
    train.insert(train.end(), members.begin() + static_cast<std::ptrdiff_t>(n_val), members.end());
  }
  std::sort(train.begin(), train.end());
  std::sort(val.begin(), val.end());
  return {std::move(train), std::move(val)};
}

// ---------------------------------------------------------------------------
// Key-value files

KeyValues KeyValues::parse(const std::string& text, const std::string& source) {
  KeyValues kv;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    const std::string body = trim(line.substr(0, hash));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos)
      throw ParseError(source + ":" + std::to_string(line_no) + ": expected `key = value`");
    std::string key = trim(body.substr(0, eq));
    if (key.empty()) throw ParseError(source + ":" + std::to_string(line_no) + ": empty key");
    kv.set(key, trim(body.substr(eq + 1)));
  }
  return kv;
}

KeyValues KeyValues::load(const fs::path& path) { return parse(read_file(path), path.string()); }

bool KeyValues::contains(const std::string& key) const { return get(key).has_value(); }

std::optional<std::string> KeyValues::get(const std::string& key) const {
  for (const auto& [k, v] : entries_)
    if (k == key) return v;
  return std::nullopt;
}

void KeyValues::set(const std::string& key, std::string value) {
  for (auto& [k, v] : entries_)
    if (k == key) {
      v = std::move(value);
      return;
    }
  entries_.emplace_back(key, std::move(value));
}

std::string KeyValues::to_string() const {
  std::string out;
  for (const auto& [k, v] : entries_) out += k + " = " + v + "\n";
  return out;
}

double KeyValues::get_double(const std::string& key, double fallback) const {
  auto v = get(key);
  return v ? parse_double(*v, "key '" + key + "'") : fallback;
}

std::int64_t KeyValues::get_int(const std::string& key, std::int64_t fallback) const {
  auto v = get(key);
  return v ? parse_int(*v, "key '" + key + "'") : fallback;
}

bool KeyValues::get_bool(const std::string& key, bool fallback) const {
  auto v = get(key);
  if (!v) return fallback;
  if (*v == "1" || *v == "true" || *v == "yes") return true;
  if (*v == "0" || *v == "false" || *v == "no") return false;
  throw ParseError("key '" + key + "': '" + *v + "' is not a boolean");
}

// ---------------------------------------------------------------------------
// Stain reference files

namespace {
constexpr const char* kStainKeys[2][3] = {{"stain0_r", "stain0_g", "stain0_b"},
                                          {"stain1_r", "stain1_g", "stain1_b"}};
constexpr const char* kMaxKeys[2] = {"max_conc0", "max_conc1"};
}  // namespace

StainReference load_reference(const fs::path& path) {
  const KeyValues kv = KeyValues::load(path);
  StainMatrix::Matrix m;
  std::array<double, 2> maxima{};
  for (int j = 0; j < 2; ++j) {
    for (int c = 0; c < 3; ++c) {
      if (!kv.contains(kStainKeys[j][c]))
        throw ParseError(path.string() + ": missing key '" + kStainKeys[j][c] + "'");
      m(c, j) = kv.get_double(kStainKeys[j][c], 0.0);
    }
    if (!kv.contains(kMaxKeys[j])) throw ParseError(path.string() + ": missing key '" + kMaxKeys[j] + "'");
    maxima[j] = kv.get_double(kMaxKeys[j], 0.0);
  }
  // Keep already-unit columns bit-exact so saved references reload unchanged.
  const bool unit = std::abs(m.col(0).norm() - 1.0) <= 1e-9 && std::abs(m.col(1).norm() - 1.0) <= 1e-9;
  StainReference ref{unit ? StainMatrix(m) : StainMatrix::from_unnormalized(m), maxima};
  ref.validate();
  return ref;
}

void save_reference(const StainReference& reference, const fs::path& path) {
  KeyValues kv;
  for (int j = 0; j < 2; ++j) {
    for (int c = 0; c < 3; ++c) kv.set(kStainKeys[j][c], format_double(reference.stains.matrix()(c, j)));
  }
  for (int j = 0; j < 2; ++j) kv.set(kMaxKeys[j], format_double(reference.max_concentrations[j]));
  atomic_write(path, kv.to_string());
}

// ---------------------------------------------------------------------------
// Files

void atomic_write(const fs::path& path, const std::string& bytes) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("failed writing " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw IoError("cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingFile("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (!EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr))
    throw IoError("SHA-256 computation failed");
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0xf]);
  }
  return out;
}

}  // namespace cbtail
