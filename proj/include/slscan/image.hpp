#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace slscan {

// Single-channel raster, row-major, 8 bits per pixel.
struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;

  GrayImage() = default;
  GrayImage(int w, int h, std::uint8_t fill = 0);

  std::size_t size() const noexcept { return pixels.size(); }
  std::uint8_t& at(int x, int y) { return pixels[static_cast<std::size_t>(y) * width + x]; }
  std::uint8_t at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }

  friend bool operator==(const GrayImage&, const GrayImage&) = default;
};

// Double-precision raster used for full-precision pattern synthesis and
// decoding diagnostics.
struct ImageF {
  int width = 0;
  int height = 0;
  std::vector<double> pixels;

  ImageF() = default;
  ImageF(int w, int h, double fill = 0.0);
  explicit ImageF(const GrayImage& img);

  std::size_t size() const noexcept { return pixels.size(); }
  double& at(int x, int y) { return pixels[static_cast<std::size_t>(y) * width + x]; }
  double at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
};

// Round-half-up to the nearest integer, clamped to [0, 255].
std::uint8_t quantize_intensity(double v) noexcept;

}  // namespace slscan
