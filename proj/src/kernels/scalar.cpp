#include "slscan/kernels.hpp"

#include <algorithm>
#include <cmath>

namespace slscan::kernels {
namespace {

void min_max_scalar(std::span<const std::uint8_t* const> planes, std::size_t n, std::uint8_t* lo,
                    std::uint8_t* hi) {
  if (planes.empty()) {
    std::fill_n(lo, n, std::uint8_t{0});
    std::fill_n(hi, n, std::uint8_t{0});
    return;
  }
  std::copy_n(planes[0], n, lo);
  std::copy_n(planes[0], n, hi);
  for (std::size_t k = 1; k < planes.size(); ++k) {
    const std::uint8_t* plane = planes[k];
    for (std::size_t i = 0; i < n; ++i) {
      lo[i] = std::min(lo[i], plane[i]);
      hi[i] = std::max(hi[i], plane[i]);
    }
  }
}

void classify_scalar(const std::uint8_t* p, const std::uint8_t* q, const std::int16_t* direct,
                     const std::int16_t* global, std::int16_t m, std::uint8_t* out,
                     std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    const int pi = p[i];
    const int qi = q[i];
    const int d = direct[i];
    const int g = global[i];
    std::uint8_t r;
    if (d < m) {
      r = kBitUncertain;
    } else if (d > g) {
      r = pi > qi ? kBitOne : kBitZero;
    } else if (pi < d && qi > g) {
      r = kBitZero;
    } else if (pi > g && qi < d) {
      r = kBitOne;
    } else {
      r = kBitUncertain;
    }
    out[i] = r;
  }
}

void phase_terms_scalar(const double* i1, const double* i2, const double* i3, double* num,
                        double* den, std::size_t n) {
  const double sqrt3 = std::sqrt(3.0);
  for (std::size_t i = 0; i < n; ++i) {
    num[i] = sqrt3 * (i1[i] - i3[i]);
    den[i] = (2.0 * i2[i] - i1[i]) - i3[i];
  }
}

void squared_distances_scalar(const double* xs, const double* ys, const double* zs, std::size_t n,
                              double qx, double qy, double qz, double* out) {
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = xs[i] - qx;
    const double dy = ys[i] - qy;
    const double dz = zs[i] - qz;
    out[i] = (dx * dx + dy * dy) + dz * dz;
  }
}

}  // namespace

const KernelTable& scalar_table() noexcept {
  static const KernelTable table{Isa::scalar, min_max_scalar, classify_scalar, phase_terms_scalar,
                                 squared_distances_scalar};
  return table;
}

}  // namespace slscan::kernels
