#include "slscan/simulator.hpp"

#include "slscan/error.hpp"
#include "slscan/parallel.hpp"

#include <cmath>
#include <numbers>

namespace slscan::sim {
namespace {

std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

std::uint64_t mix(std::uint64_t seed, std::uint64_t counter) noexcept {
  return splitmix64(splitmix64(seed) ^ counter);
}

}  // namespace

double uniform(std::uint64_t seed, std::uint64_t counter) noexcept {
  // 53 random bits -> [0, 1).
  return static_cast<double>(mix(seed, counter) >> 11) * 0x1.0p-53;
}

double normal(std::uint64_t seed, std::uint64_t counter) noexcept {
  // Box-Muller on the counter pair (2i, 2i + 1); 1 - u keeps the log finite.
  const double u1 = 1.0 - uniform(seed, 2 * counter);
  const double u2 = uniform(seed, 2 * counter + 1);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

GrayImage add_noise(const GrayImage& image, double sigma, std::uint64_t seed) {
  if (!(sigma >= 0.0)) throw Error(ErrorCode::InvalidArgument, "noise sigma must be non-negative");
  if (sigma == 0.0) return image;
  GrayImage out = image;
  parallel_for(out.size(), [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      out.pixels[i] = quantize_intensity(image.pixels[i] + sigma * normal(seed, i));
    }
  });
  return out;
}

codec::PatternStack add_noise(const codec::PatternStack& stack, double sigma, std::uint64_t seed) {
  codec::PatternStack out = stack;
  for (std::size_t f = 0; f < out.frames.size(); ++f) {
    out.frames[f].image = add_noise(stack.frames[f].image, sigma, mix(seed, 0xF00D0000ull + f));
  }
  return out;
}

PointCloud add_outliers(const PointCloud& cloud, double fraction, const Vec3& lo, const Vec3& hi,
                        std::uint64_t seed) {
  if (!(fraction >= 0.0 && fraction < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "outlier fraction must lie in [0, 1)");
  }
  PointCloud out;
  out.points = cloud.points;
  const auto extra = static_cast<std::size_t>(
      std::llround(fraction * static_cast<double>(cloud.size()) / (1.0 - fraction)));
  for (std::size_t k = 0; k < extra; ++k) {
    Vec3 p;
    for (int a = 0; a < 3; ++a) {
      p(a) = lo(a) + (hi(a) - lo(a)) * uniform(seed, 3 * k + static_cast<std::uint64_t>(a));
    }
    out.points.push_back(p);
  }
  return out;
}

}  // namespace slscan::sim
