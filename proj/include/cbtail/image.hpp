// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The cbtail Authors

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

namespace cbtail {

/// 8-bit RGB image, interleaved, row-major.
class Image {
 public:
  Image() = default;
  Image(int width, int height, std::uint8_t fill = 0);
  Image(int width, int height, std::vector<std::uint8_t> pixels);

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t pixel_count() const { return static_cast<std::size_t>(width_) * height_; }
  bool empty() const { return pixel_count() == 0; }

  std::uint8_t& at(int x, int y, int c) { return pixels_[index(x, y, c)]; }
  std::uint8_t at(int x, int y, int c) const { return pixels_[index(x, y, c)]; }

  const std::vector<std::uint8_t>& data() const { return pixels_; }
  std::vector<std::uint8_t>& data() { return pixels_; }

  friend bool operator==(const Image&, const Image&) = default;

 private:
  std::size_t index(int x, int y, int c) const {
    return (static_cast<std::size_t>(y) * width_ + x) * 3 + c;
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> pixels_;
};

// Geometric and photometric transforms.
Image flip_horizontal(const Image& image);
Image flip_vertical(const Image& image);
/// Rotates by 90 degrees clockwise; width and height swap.
Image rotate90(const Image& image);
Image rotate180(const Image& image);
Image rotate270(const Image& image);
/// Multiplies every channel by `factor`, rounding half away from zero and clamping to [0,255].
Image scale_brightness(const Image& image, double factor);

/// Bilinear resize with half-pixel centers:
/// src = (dst + 0.5) * in_size / out_size - 0.5, clamped to [0, in_size - 1].
Image resize_bilinear(const Image& image, int out_width, int out_height);
/// Crops a centered window; offsets are floor((size - crop) / 2) on each axis.
Image center_crop(const Image& image, int crop_width, int crop_height);

/// Mean absolute per-channel difference; images must share dimensions.
double mean_abs_difference(const Image& a, const Image& b);

// PNG (via libpng) and binary PPM (P6, maxval 255). Format is chosen by extension.
Image read_image(const std::filesystem::path& path);
void write_image(const Image& image, const std::filesystem::path& path);
Image read_ppm(const std::filesystem::path& path);
void write_ppm(const Image& image, const std::filesystem::path& path);
Image read_png(const std::filesystem::path& path);
void write_png(const Image& image, const std::filesystem::path& path);

}  // namespace cbtail
