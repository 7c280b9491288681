// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The cbtail Authors

#include "cbtail/checkpoint.hpp"

#include <bit>
#include <cstring>

#include "cbtail/errors.hpp"

namespace cbtail {

namespace {

constexpr char kMagic[8] = {'C', 'B', 'T', 'A', 'I', 'L', 'C', 'K'};

class Writer {
 public:
  void raw(const void* data, std::size_t n) { out_.append(static_cast<const char*>(data), n); }
  void u8(std::uint8_t v) { out_.push_back(static_cast<char>(v)); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    raw(s.data(), s.size());
  }
  // Row-major regardless of Eigen's storage order.
  void matrix(const Eigen::MatrixXd& m) {
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c) f64(m(r, c));
  }
  void vector(const Eigen::VectorXd& v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) f64(v[i]);
  }
  std::string take() { return std::move(out_); }

 private:
  std::string out_;
};

class Reader {
 public:
  explicit Reader(const std::string& in) : in_(in) {}

  const char* take(std::size_t n) {
    if (in_.size() - pos_ < n) throw ParseError("checkpoint truncated at byte " + std::to_string(pos_));
    const char* p = in_.data() + pos_;
    pos_ += n;
    return p;
  }
  std::uint8_t u8() { return static_cast<std::uint8_t>(*take(1)); }
  std::uint32_t u32() {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(u8()) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(u8()) << (8 * i);
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string str() {
    const std::uint32_t n = u32();
    return std::string(take(n), n);
  }
  Eigen::MatrixXd matrix(Eigen::Index rows, Eigen::Index cols) {
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r)
      for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = f64();
    return m;
  }
  Eigen::VectorXd vector(Eigen::Index n) {
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = f64();
    return v;
  }
  bool done() const { return pos_ == in_.size(); }

 private:
  const std::string& in_;
  std::size_t pos_ = 0;
};

// Bounds dimension fields so a corrupt header cannot request huge allocations.
std::uint32_t checked_dim(std::uint32_t v, const char* what) {
  if (v == 0 || v > (1u << 20)) throw ParseError(std::string("checkpoint has invalid ") + what);
  return v;
}

}  // namespace

std::string serialize_checkpoint(const Checkpoint& ckpt) {
  const Model& model = ckpt.model;
  Writer w;
  w.raw(kMagic, sizeof kMagic);
  w.u32(Checkpoint::kVersion);
  w.u32(static_cast<std::uint32_t>(model.trained_stage));
  w.u64(ckpt.seed);
  w.str(ckpt.prng_algorithm);
  w.str(ckpt.config.to_string());
  w.str(ckpt.parent_sha256);
  w.u32(static_cast<std::uint32_t>(ckpt.labels.size()));
  for (const auto& name : ckpt.labels.names()) w.str(name);

  w.u32(static_cast<std::uint32_t>(model.input_dim()));
  w.u32(static_cast<std::uint32_t>(model.backbone.layers.size()));
  for (const auto& layer : model.backbone.layers) w.u32(static_cast<std::uint32_t>(layer.bias.size()));
  w.u32(static_cast<std::uint32_t>(model.num_classes()));
  w.u8(model.backbone.frozen ? 1 : 0);
  for (const auto& layer : model.backbone.layers) {
    w.matrix(layer.weight);
    w.vector(layer.bias);
  }
  w.matrix(model.classifier.weight);
  w.vector(model.classifier.bias);
  return w.take();
}

Checkpoint deserialize_checkpoint(const std::string& bytes) {
  Reader r(bytes);
  if (std::memcmp(r.take(sizeof kMagic), kMagic, sizeof kMagic) != 0)
    throw ParseError("not a cbtail checkpoint (bad magic)");
  const std::uint32_t version = r.u32();
  if (version != Checkpoint::kVersion)
    throw ParseError("unsupported checkpoint version " + std::to_string(version));

  Checkpoint ckpt;
  ckpt.model.trained_stage = static_cast<int>(r.u32());
  ckpt.seed = r.u64();
  ckpt.prng_algorithm = r.str();
  ckpt.config = KeyValues::parse(r.str(), "checkpoint config");
  ckpt.parent_sha256 = r.str();
  std::vector<std::string> names(r.u32());
  for (auto& name : names) name = r.str();
  ckpt.labels = LabelSpace(std::move(names));

  Model& model = ckpt.model;
  model.backbone.input_dim = static_cast<int>(checked_dim(r.u32(), "input dimension"));
  const std::uint32_t n_layers = r.u32();
  if (n_layers > 64) throw ParseError("checkpoint has too many layers");
  std::vector<int> widths(n_layers);
  for (auto& width : widths) width = static_cast<int>(checked_dim(r.u32(), "layer width"));
  const int num_classes = static_cast<int>(checked_dim(r.u32(), "class count"));
  model.backbone.frozen = r.u8() != 0;

  int fan_in = model.backbone.input_dim;
  for (int width : widths) {
    DenseLayer layer;
    layer.weight = r.matrix(width, fan_in);
    layer.bias = r.vector(width);
    model.backbone.layers.push_back(std::move(layer));
    fan_in = width;
  }
  model.classifier.weight = r.matrix(fan_in, num_classes);
  model.classifier.bias = r.vector(num_classes);
  if (!r.done()) throw ParseError("trailing bytes after checkpoint payload");
  if (ckpt.labels.size() != 0 && ckpt.labels.size() != num_classes)
    throw ParseError("checkpoint label space does not match its class count");
  return ckpt;
}

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path) {
  atomic_write(path, serialize_checkpoint(checkpoint));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  return deserialize_checkpoint(read_file(path));
}

}  // namespace cbtail
