// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The cbtail Authors

#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace cbtail {

/// Seedable generator with bit-reproducible output across builds.
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the
/// standard. The standard distributions are implementation-defined, so every
/// variate is derived here from raw engine words instead.
class Rng {
 public:
  static constexpr std::string_view kAlgorithm = "mt19937_64/u53-lemire-boxmuller";

  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  /// Unbiased integer in [0, bound) (Lemire's multiply-and-reject).
  std::uint64_t below(std::uint64_t bound);

  /// Standard normal variate (Box-Muller, one value per call).
  double normal();

 private:
  std::mt19937_64 engine_;
};

/// Derives an independent stream seed from a base seed (splitmix64 finalizer).
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

}  // namespace cbtail
