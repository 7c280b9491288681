// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The cbtail Authors

#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "cbtail/image.hpp"
#include "cbtail/stain_norm.hpp"

namespace cbtail {

struct SynthStainSpec {
  StainMatrix stains = StainReference::standard().stains;
  std::array<double, 2> min_concentration{0.0, 0.0};
  std::array<double, 2> max_concentration{1.0, 1.0};
  /// Fraction of pixels carrying a single stain (split evenly between the
  /// two); the rest draw both concentrations independently.
  double pure_fraction = 0.0;
  int width = 64;
  int height = 64;
  std::uint64_t seed = 0;
};

struct SynthStainedImage {
  Image image;
  ConcentrationMap concentrations;
};

/// Beer-Lambert rendering v = round(255 * 10^-(S c)) of uniform random
/// concentrations.
SynthStainedImage synth_stained_image(const SynthStainSpec& spec);

/// A stain matrix near the standard H&E template: each column rotated by a
/// random angle up to `max_degrees`, kept nonnegative.
StainMatrix perturbed_stain_matrix(std::uint64_t seed, double max_degrees);

struct SynthBlobSpec {
  Eigen::MatrixXd centers;  // dim x C
  std::vector<double> spreads;  // per-class isotropic standard deviation
  std::vector<std::int64_t> counts;
  std::uint64_t seed = 0;

  int num_classes() const { return static_cast<int>(counts.size()); }
  int dim() const { return static_cast<int>(centers.rows()); }
  void validate() const;

  /// C = 5, counts (2000, 600, 180, 54, 16), dim 8, centers 3.5 * e_j,
  /// unit spread.
  static SynthBlobSpec long_tail_benchmark(std::uint64_t seed);
};

struct SynthBlobs {
  Eigen::MatrixXd features;  // dim x n, grouped by class in order
  std::vector<int> labels;
};

/// Per class j, counts[j] draws from N(center_j, spread_j^2 I).
SynthBlobs synth_blobs(const SynthBlobSpec& spec);

/// Geometric class counts n_j = round(head * ratio^j), floored at 1.
std::vector<std::int64_t> geometric_counts(std::int64_t head, double ratio, int num_classes);

}  // namespace cbtail
