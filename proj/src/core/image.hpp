#pragma once

#include <cstddef>
#include <filesystem>
#include <vector>

namespace recap {

/// Interleaved RGB buffer, row-major, channel values nominally in [0, 1].
struct Image {
  int width = 0;
  int height = 0;
  std::vector<double> data;  // height * width * 3

  Image() = default;
  Image(int w, int h, double fill = 0.0)
      : width(w), height(h), data(static_cast<std::size_t>(w) * h * 3, fill) {}

  std::size_t pixel_count() const { return static_cast<std::size_t>(width) * height; }
  double& at(int x, int y, int c) { return data[(static_cast<std::size_t>(y) * width + x) * 3 + c]; }
  double at(int x, int y, int c) const {
    return data[(static_cast<std::size_t>(y) * width + x) * 3 + c];
  }
  bool same_shape(const Image& o) const { return width == o.width && height == o.height; }
  bool operator==(const Image& o) const = default;
};

/// 8-bit RGB PNG. Values are clamped to [0,1] and rounded to the nearest k/255.
void write_png(const Image& image, const std::filesystem::path& path);
/// Loads an 8-bit RGB(A) or grayscale PNG; channel value = byte / 255.
Image read_png(const std::filesystem::path& path);

/// Rounds every channel to the nearest multiple of 1/255 (what a PNG round
/// trip produces).
Image quantize8(const Image& image);

/// Bilinear resample with pixel-center alignment and edge clamping.
Image resize_bilinear(const Image& image, int width, int height);

/// Luma Y = 0.299 R + 0.587 G + 0.114 B, row-major.
std::vector<double> to_luma(const Image& image);

}  // namespace recap
