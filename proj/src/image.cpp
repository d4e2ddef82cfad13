#include "slscan/image.hpp"

#include <cmath>

namespace slscan {

GrayImage::GrayImage(int w, int h, std::uint8_t fill)
    : width(w), height(h), pixels(static_cast<std::size_t>(w) * h, fill) {}

ImageF::ImageF(int w, int h, double fill)
    : width(w), height(h), pixels(static_cast<std::size_t>(w) * h, fill) {}

ImageF::ImageF(const GrayImage& img)
    : width(img.width), height(img.height), pixels(img.pixels.begin(), img.pixels.end()) {}

std::uint8_t quantize_intensity(double v) noexcept {
  if (!(v > 0.0)) return 0;
  const double r = std::floor(v + 0.5);
  if (r >= 255.0) return 255;
  return static_cast<std::uint8_t>(r);
}

}  // namespace slscan
