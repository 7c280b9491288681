// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The cbtail Authors

#include "cbtail/stain_norm.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>

#include "cbtail/errors.hpp"

namespace cbtail {

namespace {

constexpr double kUnitTolerance = 1e-9;
// Second eigenvalue relative to the first below which the OD cloud is rank-1.
constexpr double kRankTolerance = 1e-9;
// Extreme stain directions closer than this (radians) are treated as one stain.
constexpr double kMinStainSeparation = 1e-6;
constexpr double kSingularTolerance = 1e-12;
// StainMatrix only rejects exactly (numerically) parallel columns; nearly
// parallel ones are left for solve_concentrations to report as singular.
constexpr double kIndependenceTolerance = 1e-9;

}  // namespace

StainMatrix::StainMatrix(const Matrix& columns) : columns_(columns) {
  for (int j = 0; j < 2; ++j) {
    if (!columns_.col(j).allFinite()) throw InvalidArgument("stain vector is not finite");
    if (std::abs(columns_.col(j).norm() - 1.0) > kUnitTolerance)
      throw InvalidArgument("stain vector " + std::to_string(j) + " is not unit length");
    if ((columns_.col(j).array() < 0.0).any())
      throw InvalidArgument("stain vector " + std::to_string(j) + " has a negative component");
  }
  if (columns_.col(0).cross(columns_.col(1)).norm() < kIndependenceTolerance)
    throw InvalidArgument("stain vectors are linearly dependent");
}

StainMatrix StainMatrix::from_unnormalized(const Matrix& columns) {
  Matrix normalized = columns;
  for (int j = 0; j < 2; ++j) {
    const double n = columns.col(j).norm();
    if (!(n > 0.0)) throw InvalidArgument("zero stain vector");
    normalized.col(j) /= n;
  }
  return StainMatrix(normalized);
}

StainReference StainReference::standard() {
  StainMatrix::Matrix m;
  m << 0.5626, 0.2159,
       0.7201, 0.8012,
       0.4062, 0.5581;
  return {StainMatrix::from_unnormalized(m), {1.9705, 1.0308}};
}

void StainReference::validate() const {
  for (double c : max_concentrations)
    if (!(c > 0.0) || !std::isfinite(c)) throw InvalidArgument("reference max concentrations must be positive");
}

double percentile(std::vector<double> values, double q) {
  if (values.empty()) throw InvalidArgument("percentile of an empty sample");
  if (!(q >= 0.0 && q <= 100.0)) throw InvalidArgument("percentile outside [0, 100]");
  std::sort(values.begin(), values.end());
  const double pos = q / 100.0 * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

double angle_degrees(const Eigen::Vector3d& a, const Eigen::Vector3d& b) {
  return std::atan2(a.cross(b).norm(), a.dot(b)) * 180.0 / M_PI;
}

ODImage rgb_to_od(const Image& image, int background_intensity) {
  if (background_intensity < 1) throw InvalidArgument("background intensity must be >= 1");
  // OD is a function of the byte value only.
  std::array<double, 256> table{};
  const double denom = background_intensity + 1.0;
  for (int v = 0; v < 256; ++v) table[v] = std::max(0.0, -std::log10((v + 1.0) / denom));

  ODImage od{image.width(), image.height(), {}};
  od.values.resize(image.data().size());
  std::transform(image.data().begin(), image.data().end(), od.values.begin(),
                 [&table](std::uint8_t v) { return table[v]; });
  return od;
}

StainMatrix estimate_stain_matrix(const ODImage& od, double alpha_percentile, double od_threshold) {
  if (!(alpha_percentile > 0.0 && alpha_percentile < 50.0))
    throw InvalidArgument("alpha percentile must lie in (0, 50)");
  if (!(od_threshold >= 0.0)) throw InvalidArgument("OD threshold must be nonnegative");

  std::vector<Eigen::Vector3d> tissue;
  tissue.reserve(od.pixel_count());
  for (std::size_t i = 0; i < od.pixel_count(); ++i) {
    Eigen::Vector3d v = od.pixel(i);
    if (v.maxCoeff() >= od_threshold) tissue.push_back(v);
  }
  if (tissue.size() < 3)
    throw TooFewPixels(std::to_string(tissue.size()) + " pixels above OD threshold " +
                       std::to_string(od_threshold) + ", need at least 3");

  Eigen::Matrix3d moment = Eigen::Matrix3d::Zero();
  for (const auto& v : tissue) moment.noalias() += v * v.transpose();
  moment /= static_cast<double>(tissue.size());

  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(moment);
  if (eig.info() != Eigen::Success) throw DegenerateStains("eigendecomposition failed");
  const Eigen::Vector3d lambda = eig.eigenvalues();  // ascending
  if (!(lambda[2] > 0.0) || lambda[1] <= kRankTolerance * lambda[2])
    throw DegenerateStains("optical density cloud is rank-deficient (no second stain)");

  Eigen::Vector3d e1 = eig.eigenvectors().col(2);
  Eigen::Vector3d e2 = eig.eigenvectors().col(1);
  if (e1.sum() < 0.0) e1 = -e1;
  if (e2.sum() < 0.0) e2 = -e2;

  std::vector<double> angles(tissue.size());
  std::transform(tissue.begin(), tissue.end(), angles.begin(),
                 [&](const Eigen::Vector3d& v) { return std::atan2(v.dot(e2), v.dot(e1)); });
  const double lo = percentile(angles, alpha_percentile);
  const double hi = percentile(std::move(angles), 100.0 - alpha_percentile);

  auto direction = [&](double phi) {
    Eigen::Vector3d v = std::cos(phi) * e1 + std::sin(phi) * e2;
    v = v.cwiseMax(0.0);
    const double n = v.norm();
    if (!(n > 0.0)) throw DegenerateStains("extreme stain direction has no positive component");
    return Eigen::Vector3d(v / n);
  };
  const Eigen::Vector3d v_lo = direction(lo);
  const Eigen::Vector3d v_hi = direction(hi);
  if (v_lo.cross(v_hi).norm() < kMinStainSeparation)
    throw DegenerateStains("extreme stain directions coincide");

  StainMatrix::Matrix columns;
  if (v_lo[0] > v_hi[0]) {
    columns << v_lo, v_hi;
  } else {
    columns << v_hi, v_lo;
  }
  return StainMatrix(columns);
}

ConcentrationMap solve_concentrations(const ODImage& od, const StainMatrix& stains) {
  const StainMatrix::Matrix& s = stains.matrix();
  const Eigen::Matrix2d normal = s.transpose() * s;
  if (std::abs(normal.determinant()) < kSingularTolerance)
    throw SingularStainMatrix("stain normal matrix is singular");
  const Eigen::Matrix<double, 2, 3> pinv = normal.inverse() * s.transpose();

  ConcentrationMap out{od.width, od.height, std::vector<double>(2 * od.pixel_count())};
  for (std::size_t i = 0; i < od.pixel_count(); ++i) {
    const Eigen::Vector2d c = pinv * od.pixel(i);
    out.values[2 * i] = std::max(0.0, c[0]);
    out.values[2 * i + 1] = std::max(0.0, c[1]);
  }
  return out;
}

Image reconstruct_image(const ConcentrationMap& concentrations, const StainMatrix& stains,
                        int background_intensity) {
  Image out(concentrations.width, concentrations.height);
  if (out.pixel_count() != concentrations.pixel_count())
    throw InvalidArgument("concentration map size does not match its dimensions");
  const StainMatrix::Matrix& s = stains.matrix();
  auto& px = out.data();
  for (std::size_t i = 0; i < concentrations.pixel_count(); ++i) {
    const Eigen::Vector3d density = s * Eigen::Vector2d(concentrations.at(i, 0), concentrations.at(i, 1));
    for (int c = 0; c < 3; ++c) {
      const double v = std::round(background_intensity * std::pow(10.0, -density[c]));
      px[3 * i + c] = static_cast<std::uint8_t>(std::clamp(v, 0.0, 255.0));
    }
  }
  return out;
}

std::array<double, 2> concentration_percentiles(const ConcentrationMap& concentrations, double q) {
  std::array<double, 2> out{};
  for (int j = 0; j < 2; ++j) {
    std::vector<double> channel(concentrations.pixel_count());
    for (std::size_t i = 0; i < channel.size(); ++i) channel[i] = concentrations.at(i, j);
    out[j] = percentile(std::move(channel), q);
  }
  return out;
}

Image normalize_image(const Image& image, const StainReference& reference, const MacenkoParams& params) {
  reference.validate();
  const ODImage od = rgb_to_od(image, params.background_intensity);
  const StainMatrix source = estimate_stain_matrix(od, params.alpha_percentile, params.od_threshold);
  ConcentrationMap conc = solve_concentrations(od, source);

  const auto source_max = concentration_percentiles(conc, params.concentration_percentile);
  std::array<double, 2> scale{};
  for (int j = 0; j < 2; ++j)
    scale[j] = source_max[j] > 0.0 ? reference.max_concentrations[j] / source_max[j] : 1.0;
  for (std::size_t i = 0; i < conc.pixel_count(); ++i) {
    conc.values[2 * i] *= scale[0];
    conc.values[2 * i + 1] *= scale[1];
  }
  return reconstruct_image(conc, reference.stains, params.background_intensity);
}

StainReference fit_reference(const std::vector<Image>& images, const MacenkoParams& params) {
  StainMatrix::Matrix sum = StainMatrix::Matrix::Zero();
  std::array<double, 2> max_sum{};
  int used = 0;
  for (const Image& image : images) {
    const ODImage od = rgb_to_od(image, params.background_intensity);
    try {
      const StainMatrix stains = estimate_stain_matrix(od, params.alpha_percentile, params.od_threshold);
      const auto maxima = concentration_percentiles(solve_concentrations(od, stains),
                                                    params.concentration_percentile);
      sum += stains.matrix();
      max_sum[0] += maxima[0];
      max_sum[1] += maxima[1];
      ++used;
    } catch (const DegenerateStains&) {
    } catch (const TooFewPixels&) {
    }
  }
  if (used == 0) throw DegenerateStains("no image could be stain-separated");
  StainReference ref{StainMatrix::from_unnormalized(sum / used), {max_sum[0] / used, max_sum[1] / used}};
  ref.validate();
  return ref;
}

}  // namespace cbtail
