// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The cbtail Authors

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "cbtail/dataio.hpp"
#include "cbtail/model.hpp"

namespace cbtail {

/// Binary checkpoint, little-endian throughout:
///
///   magic "CBTAILCK" | u32 version | u32 trained_stage | u64 seed
///   str prng_algorithm | str config (key = value text) | str parent_sha256
///   u32 n_labels, str label...
///   u32 input_dim | u32 n_layers | u32 width... | u32 num_classes | u8 frozen
///   per layer: f64 weight[out*in] (row-major), f64 bias[out]
///   f64 classifier_weight[feature_dim*C] (row-major), f64 classifier_bias[C]
///
/// `str` is a u32 byte length followed by the bytes.
struct Checkpoint {
  static constexpr std::uint32_t kVersion = 1;

  Model model;
  std::uint64_t seed = 0;
  std::string prng_algorithm;
  KeyValues config;
  std::string parent_sha256;  // stage-2 checkpoints: hash of the stage-1 file
  LabelSpace labels;
};

std::string serialize_checkpoint(const Checkpoint& checkpoint);
/// Throws ParseError on a malformed or truncated buffer.
Checkpoint deserialize_checkpoint(const std::string& bytes);

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace cbtail
