// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The cbtail Authors

#include "cbtail/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "cbtail/errors.hpp"
#include "cbtail/rng.hpp"

namespace cbtail {

SynthStainedImage synth_stained_image(const SynthStainSpec& spec) {
  if (spec.width < 1 || spec.height < 1) throw InvalidArgument("synthetic image must have positive size");
  for (int j = 0; j < 2; ++j)
    if (!(spec.min_concentration[j] >= 0.0 && spec.min_concentration[j] <= spec.max_concentration[j]))
      throw InvalidArgument("concentration range must satisfy 0 <= min <= max");
  if (!(spec.pure_fraction >= 0.0 && spec.pure_fraction <= 1.0))
    throw InvalidArgument("pure_fraction must lie in [0, 1]");

  Rng rng(spec.seed);
  ConcentrationMap conc{spec.width, spec.height,
                        std::vector<double>(2 * static_cast<std::size_t>(spec.width) * spec.height)};
  for (std::size_t i = 0; i < conc.pixel_count(); ++i) {
    double c0 = rng.uniform(spec.min_concentration[0], spec.max_concentration[0]);
    double c1 = rng.uniform(spec.min_concentration[1], spec.max_concentration[1]);
    const double mode = rng.uniform01();
    if (mode < 0.5 * spec.pure_fraction)
      c1 = 0.0;
    else if (mode < spec.pure_fraction)
      c0 = 0.0;
    conc.values[2 * i] = c0;
    conc.values[2 * i + 1] = c1;
  }
  return {reconstruct_image(conc, spec.stains, 255), std::move(conc)};
}

StainMatrix perturbed_stain_matrix(std::uint64_t seed, double max_degrees) {
  const StainMatrix base = StainReference::standard().stains;
  Rng rng(seed);
  StainMatrix::Matrix m;
  for (int j = 0; j < 2; ++j) {
    // Rotate about a random axis orthogonal to the column.
    const Eigen::Vector3d v = base.column(j);
    Eigen::Vector3d axis(rng.normal(), rng.normal(), rng.normal());
    axis -= axis.dot(v) * v;
    axis.normalize();
    const double angle = rng.uniform(0.0, max_degrees) * M_PI / 180.0;
    Eigen::Vector3d rotated = std::cos(angle) * v + std::sin(angle) * axis.cross(v);
    m.col(j) = rotated.cwiseMax(0.0).normalized();
  }
  return StainMatrix(m);
}

void SynthBlobSpec::validate() const {
  if (num_classes() < 2) throw InvalidArgument("blob spec needs at least two classes");
  if (centers.cols() != num_classes()) throw InvalidArgument("one center per class required");
  if (static_cast<int>(spreads.size()) != num_classes()) throw InvalidArgument("one spread per class required");
  for (int j = 0; j < num_classes(); ++j) {
    if (counts[j] < 1) throw InvalidArgument("class " + std::to_string(j) + " needs at least one sample");
    if (!(spreads[j] >= 0.0)) throw InvalidArgument("spreads must be nonnegative");
  }
}

SynthBlobSpec SynthBlobSpec::long_tail_benchmark(std::uint64_t seed) {
  constexpr int kDim = 8;
  constexpr double kSeparation = 3.5;  // pairwise center distance 3.5 * sqrt(2) ~ 4.95 spreads
  SynthBlobSpec spec;
  spec.counts = {2000, 600, 180, 54, 16};
  spec.centers = Eigen::MatrixXd::Zero(kDim, 5);
  for (int j = 0; j < 5; ++j) spec.centers(j, j) = kSeparation;
  spec.spreads.assign(5, 1.0);
  spec.seed = seed;
  return spec;
}

SynthBlobs synth_blobs(const SynthBlobSpec& spec) {
  spec.validate();
  std::int64_t n = 0;
  for (auto c : spec.counts) n += c;
  SynthBlobs out{Eigen::MatrixXd(spec.dim(), n), {}};
  out.labels.reserve(static_cast<std::size_t>(n));
  Rng rng(spec.seed);
  Eigen::Index col = 0;
  for (int j = 0; j < spec.num_classes(); ++j)
    for (std::int64_t i = 0; i < spec.counts[j]; ++i, ++col) {
      for (int k = 0; k < spec.dim(); ++k) out.features(k, col) = spec.centers(k, j) + spec.spreads[j] * rng.normal();
      out.labels.push_back(j);
    }
  return out;
}

std::vector<std::int64_t> geometric_counts(std::int64_t head, double ratio, int num_classes) {
  if (head < 1 || !(ratio > 0.0) || num_classes < 1) throw InvalidArgument("invalid geometric count spec");
  std::vector<std::int64_t> counts(num_classes);
  for (int j = 0; j < num_classes; ++j)
    counts[j] = std::max<std::int64_t>(1, std::llround(static_cast<double>(head) * std::pow(ratio, j)));
  return counts;
}

}  // namespace cbtail
