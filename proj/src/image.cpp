// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The cbtail Authors

#include "cbtail/image.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <string>

#include <png.h>

#include "cbtail/errors.hpp"

namespace cbtail {

Image::Image(int width, int height, std::uint8_t fill)
    : width_(width), height_(height),
      pixels_(static_cast<std::size_t>(width) * height * 3, fill) {
  if (width < 0 || height < 0) throw InvalidArgument("negative image dimensions");
}

Image::Image(int width, int height, std::vector<std::uint8_t> pixels)
    : width_(width), height_(height), pixels_(std::move(pixels)) {
  if (width < 0 || height < 0 || pixels_.size() != static_cast<std::size_t>(width) * height * 3)
    throw InvalidArgument("pixel buffer does not match " + std::to_string(width) + "x" +
                          std::to_string(height) + "x3");
}

namespace {

template <typename Map>
Image remap(const Image& image, int out_w, int out_h, Map map) {
  Image out(out_w, out_h);
  for (int y = 0; y < out_h; ++y)
    for (int x = 0; x < out_w; ++x) {
      const auto [sx, sy] = map(x, y);
      for (int c = 0; c < 3; ++c) out.at(x, y, c) = image.at(sx, sy, c);
    }
  return out;
}

std::uint8_t clamp_round(double v) {
  return static_cast<std::uint8_t>(std::clamp(std::round(v), 0.0, 255.0));
}

std::string lower_extension(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char ch) { return std::tolower(ch); });
  return ext;
}

}  // namespace

Image flip_horizontal(const Image& image) {
  const int w = image.width();
  return remap(image, w, image.height(), [w](int x, int y) { return std::pair{w - 1 - x, y}; });
}

Image flip_vertical(const Image& image) {
  const int h = image.height();
  return remap(image, image.width(), h, [h](int x, int y) { return std::pair{x, h - 1 - y}; });
}

Image rotate90(const Image& image) {
  // Clockwise: output (x, y) takes input (y, H - 1 - x); output is H wide.
  const int h = image.height();
  return remap(image, h, image.width(), [h](int x, int y) { return std::pair{y, h - 1 - x}; });
}

Image rotate180(const Image& image) {
  const int w = image.width(), h = image.height();
  return remap(image, w, h, [w, h](int x, int y) { return std::pair{w - 1 - x, h - 1 - y}; });
}

Image rotate270(const Image& image) {
  const int w = image.width();
  return remap(image, image.height(), w, [w](int x, int y) { return std::pair{w - 1 - y, x}; });
}

Image scale_brightness(const Image& image, double factor) {
  Image out = image;
  for (auto& v : out.data()) v = clamp_round(v * factor);
  return out;
}

Image resize_bilinear(const Image& image, int out_width, int out_height) {
  if (image.empty()) throw InvalidArgument("cannot resize an empty image");
  if (out_width <= 0 || out_height <= 0) throw InvalidArgument("resize target must be positive");
  if (out_width == image.width() && out_height == image.height()) return image;

  const double sx = static_cast<double>(image.width()) / out_width;
  const double sy = static_cast<double>(image.height()) / out_height;

  struct Tap {
    int lo, hi;
    double frac;
  };
  auto taps = [](int out, double scale, int in) {
    std::vector<Tap> t(out);
    for (int i = 0; i < out; ++i) {
      double s = std::clamp((i + 0.5) * scale - 0.5, 0.0, static_cast<double>(in - 1));
      const int lo = static_cast<int>(std::floor(s));
      const int hi = std::min(lo + 1, in - 1);
      t[i] = {lo, hi, s - lo};
    }
    return t;
  };
  const auto tx = taps(out_width, sx, image.width());
  const auto ty = taps(out_height, sy, image.height());

  Image out(out_width, out_height);
  for (int y = 0; y < out_height; ++y) {
    const Tap& v = ty[y];
    for (int x = 0; x < out_width; ++x) {
      const Tap& u = tx[x];
      for (int c = 0; c < 3; ++c) {
        const double top = image.at(u.lo, v.lo, c) + u.frac * (image.at(u.hi, v.lo, c) - image.at(u.lo, v.lo, c));
        const double bottom = image.at(u.lo, v.hi, c) + u.frac * (image.at(u.hi, v.hi, c) - image.at(u.lo, v.hi, c));
        out.at(x, y, c) = clamp_round(top + v.frac * (bottom - top));
      }
    }
  }
  return out;
}

Image center_crop(const Image& image, int crop_width, int crop_height) {
  if (crop_width <= 0 || crop_height <= 0 || crop_width > image.width() || crop_height > image.height())
    throw InvalidArgument("crop " + std::to_string(crop_width) + "x" + std::to_string(crop_height) +
                          " does not fit image " + std::to_string(image.width()) + "x" +
                          std::to_string(image.height()));
  const int ox = (image.width() - crop_width) / 2;
  const int oy = (image.height() - crop_height) / 2;
  return remap(image, crop_width, crop_height, [ox, oy](int x, int y) { return std::pair{x + ox, y + oy}; });
}

double mean_abs_difference(const Image& a, const Image& b) {
  if (a.width() != b.width() || a.height() != b.height())
    throw InvalidArgument("image dimensions differ");
  if (a.empty()) return 0.0;
  std::int64_t sum = 0;
  for (std::size_t i = 0; i < a.data().size(); ++i) sum += std::abs(int(a.data()[i]) - int(b.data()[i]));
  return static_cast<double>(sum) / static_cast<double>(a.data().size());
}

Image read_image(const std::filesystem::path& path) {
  const std::string ext = lower_extension(path);
  if (ext == ".png") return read_png(path);
  if (ext == ".ppm") return read_ppm(path);
  throw IoError("unsupported image format: " + path.string());
}

void write_image(const Image& image, const std::filesystem::path& path) {
  const std::string ext = lower_extension(path);
  if (ext == ".png") return write_png(image, path);
  if (ext == ".ppm") return write_ppm(image, path);
  throw IoError("unsupported image format: " + path.string());
}

namespace {

// Reads the next whitespace-separated header token, skipping '#' comments.
std::string ppm_token(std::istream& in) {
  std::string token;
  int ch;
  while ((ch = in.get()) != EOF) {
    if (ch == '#') {
      while ((ch = in.get()) != EOF && ch != '\n') {
      }
      continue;
    }
    if (std::isspace(ch)) {
      if (!token.empty()) break;
      continue;
    }
    token.push_back(static_cast<char>(ch));
  }
  return token;
}

}  // namespace

Image read_ppm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingFile("cannot open " + path.string());
  if (ppm_token(in) != "P6") throw IoError(path.string() + ": not a binary PPM (P6)");
  int w = 0, h = 0, maxval = 0;
  try {
    w = std::stoi(ppm_token(in));
    h = std::stoi(ppm_token(in));
    maxval = std::stoi(ppm_token(in));
  } catch (const std::exception&) {
    throw IoError(path.string() + ": malformed PPM header");
  }
  if (w <= 0 || h <= 0 || maxval != 255) throw IoError(path.string() + ": only 8-bit PPM is supported");
  std::vector<std::uint8_t> pixels(static_cast<std::size_t>(w) * h * 3);
  in.read(reinterpret_cast<char*>(pixels.data()), static_cast<std::streamsize>(pixels.size()));
  if (in.gcount() != static_cast<std::streamsize>(pixels.size()))
    throw IoError(path.string() + ": truncated pixel data");
  return Image(w, h, std::move(pixels));
}

void write_ppm(const Image& image, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << "P6\n" << image.width() << " " << image.height() << "\n255\n";
  out.write(reinterpret_cast<const char*>(image.data().data()),
            static_cast<std::streamsize>(image.data().size()));
  if (!out) throw IoError("failed writing " + path.string());
}

Image read_png(const std::filesystem::path& path) {
  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  if (!std::filesystem::exists(path)) throw MissingFile("cannot open " + path.string());
  if (!png_image_begin_read_from_file(&png, path.c_str()))
    throw IoError(path.string() + ": " + png.message);
  png.format = PNG_FORMAT_RGB;
  std::vector<std::uint8_t> pixels(PNG_IMAGE_SIZE(png));
  if (!png_image_finish_read(&png, nullptr, pixels.data(), 0, nullptr)) {
    png_image_free(&png);
    throw IoError(path.string() + ": " + png.message);
  }
  return Image(static_cast<int>(png.width), static_cast<int>(png.height), std::move(pixels));
}

void write_png(const Image& image, const std::filesystem::path& path) {
  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  png.width = static_cast<png_uint_32>(image.width());
  png.height = static_cast<png_uint_32>(image.height());
  png.format = PNG_FORMAT_RGB;
  if (!png_image_write_to_file(&png, path.c_str(), 0, image.data().data(), 0, nullptr))
    throw IoError(path.string() + ": " + png.message);
}

}  // namespace cbtail
