// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The cbtail Authors

#pragma once

#include <array>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "cbtail/image.hpp"

namespace cbtail {

/// Per-channel optical density image, same layout as Image.
struct ODImage {
  int width = 0;
  int height = 0;
  std::vector<double> values;  // 3 per pixel, interleaved

  std::size_t pixel_count() const { return values.size() / 3; }
  Eigen::Vector3d pixel(std::size_t i) const {
    return {values[3 * i], values[3 * i + 1], values[3 * i + 2]};
  }
};

/// Two unit-norm, nonnegative stain vectors in OD space. Column 0 is the
/// hematoxylin-like stain (larger red-channel component).
class StainMatrix {
 public:
  using Matrix = Eigen::Matrix<double, 3, 2>;

  /// Validates the invariants; throws InvalidArgument when violated.
  explicit StainMatrix(const Matrix& columns);
  /// Normalizes both columns to unit length before validating.
  static StainMatrix from_unnormalized(const Matrix& columns);

  const Matrix& matrix() const { return columns_; }
  Eigen::Vector3d column(int j) const { return columns_.col(j); }

 private:
  Matrix columns_;
};

/// Per-pixel stain concentrations, 2 per pixel.
struct ConcentrationMap {
  int width = 0;
  int height = 0;
  std::vector<double> values;

  std::size_t pixel_count() const { return values.size() / 2; }
  double at(std::size_t pixel, int stain) const { return values[2 * pixel + stain]; }
};

struct StainReference {
  StainMatrix stains;
  std::array<double, 2> max_concentrations;

  /// Standard H&E template: H = (0.5626, 0.7201, 0.4062), E = (0.2159, 0.8012, 0.5581),
  /// max concentrations (1.9705, 1.0308).
  static StainReference standard();
  void validate() const;
};

struct MacenkoParams {
  double alpha_percentile = 1.0;
  double od_threshold = 0.15;
  int background_intensity = 255;
  double concentration_percentile = 99.0;
};

ODImage rgb_to_od(const Image& image, int background_intensity = 255);

/// Macenko estimate of the two dominant stain directions.
///
/// Pixels whose maximum channel OD is below `od_threshold` are dropped. The
/// remaining OD vectors are projected onto the top-2 eigenvectors of their
/// (uncentered) second-moment matrix; the stains are the directions at the
/// `alpha` and `100 - alpha` percentiles of the projected angle.
///
/// Throws TooFewPixels when fewer than 3 pixels survive, DegenerateStains when
/// the OD cloud is rank-deficient or the two extremes coincide.
StainMatrix estimate_stain_matrix(const ODImage& od, double alpha_percentile = 1.0,
                                  double od_threshold = 0.15);

/// Least-squares concentrations via the pseudo-inverse of the stain matrix,
/// negatives clamped to 0. Throws SingularStainMatrix if det(S^T S) < 1e-12.
ConcentrationMap solve_concentrations(const ODImage& od, const StainMatrix& stains);

/// Beer-Lambert rendering: v = round(background * 10^-(S c)), clamped to [0,255].
Image reconstruct_image(const ConcentrationMap& concentrations, const StainMatrix& stains,
                        int background_intensity = 255);

/// Per-stain percentile (linear interpolation) of a concentration map.
std::array<double, 2> concentration_percentiles(const ConcentrationMap& concentrations,
                                                double percentile);

/// Full Macenko normalization onto `reference`. Propagates DegenerateStains
/// and TooFewPixels; callers choose the fallback.
Image normalize_image(const Image& image, const StainReference& reference,
                      const MacenkoParams& params = {});

/// Averages stain matrices (column-wise, renormalized) and percentile
/// concentrations over a set of images. Images that cannot be stain-separated
/// are skipped; throws DegenerateStains when none can be.
StainReference fit_reference(const std::vector<Image>& images, const MacenkoParams& params = {});

/// Angle in degrees between two vectors.
double angle_degrees(const Eigen::Vector3d& a, const Eigen::Vector3d& b);

/// Linear-interpolation percentile (numpy's default) of an unsorted sample.
double percentile(std::vector<double> values, double q);

}  // namespace cbtail
