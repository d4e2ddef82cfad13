// Compiled with -mavx2 (and without FMA, so products round exactly as in the
// scalar reference). Only reached after a runtime CPU check.

#include "slscan/kernels.hpp"

#include <immintrin.h>

#include <algorithm>
#include <cmath>

namespace slscan::kernels {
namespace {

void min_max_avx2(std::span<const std::uint8_t* const> planes, std::size_t n, std::uint8_t* lo,
                  std::uint8_t* hi) {
  if (planes.empty()) {
    std::fill_n(lo, n, std::uint8_t{0});
    std::fill_n(hi, n, std::uint8_t{0});
    return;
  }
  const std::size_t simd_end = n - n % 32;
  for (std::size_t i = 0; i < simd_end; i += 32) {
    __m256i vlo = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(planes[0] + i));
    __m256i vhi = vlo;
    for (std::size_t k = 1; k < planes.size(); ++k) {
      const __m256i v = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(planes[k] + i));
      vlo = _mm256_min_epu8(vlo, v);
      vhi = _mm256_max_epu8(vhi, v);
    }
    _mm256_storeu_si256(reinterpret_cast<__m256i*>(lo + i), vlo);
    _mm256_storeu_si256(reinterpret_cast<__m256i*>(hi + i), vhi);
  }
  for (std::size_t i = simd_end; i < n; ++i) {
    std::uint8_t a = planes[0][i];
    std::uint8_t b = a;
    for (std::size_t k = 1; k < planes.size(); ++k) {
      a = std::min(a, planes[k][i]);
      b = std::max(b, planes[k][i]);
    }
    lo[i] = a;
    hi[i] = b;
  }
}

std::uint8_t classify_one(int p, int q, int d, int g, int m) {
  if (d < m) return kBitUncertain;
  if (d > g) return p > q ? kBitOne : kBitZero;
  if (p < d && q > g) return kBitZero;
  if (p > g && q < d) return kBitOne;
  return kBitUncertain;
}

void classify_avx2(const std::uint8_t* p, const std::uint8_t* q, const std::int16_t* direct,
                   const std::int16_t* global, std::int16_t m, std::uint8_t* out, std::size_t n) {
  const __m256i vm = _mm256_set1_epi16(m);
  const __m256i one = _mm256_set1_epi16(kBitOne);
  const __m256i zero = _mm256_setzero_si256();
  const __m256i uncertain = _mm256_set1_epi16(kBitUncertain);
  const std::size_t simd_end = n - n % 16;
  for (std::size_t i = 0; i < simd_end; i += 16) {
    const __m256i vp =
        _mm256_cvtepu8_epi16(_mm_loadu_si128(reinterpret_cast<const __m128i*>(p + i)));
    const __m256i vq =
        _mm256_cvtepu8_epi16(_mm_loadu_si128(reinterpret_cast<const __m128i*>(q + i)));
    const __m256i vd = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(direct + i));
    const __m256i vg = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(global + i));

    const __m256i low_direct = _mm256_cmpgt_epi16(vm, vd);
    const __m256i direct_dominant = _mm256_cmpgt_epi16(vd, vg);
    const __m256i p_wins = _mm256_cmpgt_epi16(vp, vq);
    const __m256i rule_zero =
        _mm256_and_si256(_mm256_cmpgt_epi16(vd, vp), _mm256_cmpgt_epi16(vq, vg));
    const __m256i rule_one =
        _mm256_and_si256(_mm256_cmpgt_epi16(vp, vg), _mm256_cmpgt_epi16(vd, vq));

    // Apply rules from lowest to highest precedence.
    __m256i r = uncertain;
    r = _mm256_blendv_epi8(r, one, rule_one);
    r = _mm256_blendv_epi8(r, zero, rule_zero);
    r = _mm256_blendv_epi8(r, _mm256_and_si256(p_wins, one), direct_dominant);
    r = _mm256_blendv_epi8(r, uncertain, low_direct);

    const __m256i packed = _mm256_permute4x64_epi64(_mm256_packus_epi16(r, r), 0xD8);
    _mm_storeu_si128(reinterpret_cast<__m128i*>(out + i), _mm256_castsi256_si128(packed));
  }
  for (std::size_t i = simd_end; i < n; ++i) {
    out[i] = classify_one(p[i], q[i], direct[i], global[i], m);
  }
}

void phase_terms_avx2(const double* i1, const double* i2, const double* i3, double* num,
                      double* den, std::size_t n) {
  const double sqrt3 = std::sqrt(3.0);
  const __m256d vs3 = _mm256_set1_pd(sqrt3);
  const __m256d two = _mm256_set1_pd(2.0);
  const std::size_t simd_end = n - n % 4;
  for (std::size_t i = 0; i < simd_end; i += 4) {
    const __m256d a = _mm256_loadu_pd(i1 + i);
    const __m256d b = _mm256_loadu_pd(i2 + i);
    const __m256d c = _mm256_loadu_pd(i3 + i);
    _mm256_storeu_pd(num + i, _mm256_mul_pd(vs3, _mm256_sub_pd(a, c)));
    _mm256_storeu_pd(den + i, _mm256_sub_pd(_mm256_sub_pd(_mm256_mul_pd(two, b), a), c));
  }
  for (std::size_t i = simd_end; i < n; ++i) {
    num[i] = sqrt3 * (i1[i] - i3[i]);
    den[i] = (2.0 * i2[i] - i1[i]) - i3[i];
  }
}

void squared_distances_avx2(const double* xs, const double* ys, const double* zs, std::size_t n,
                            double qx, double qy, double qz, double* out) {
  const __m256d vx = _mm256_set1_pd(qx);
  const __m256d vy = _mm256_set1_pd(qy);
  const __m256d vz = _mm256_set1_pd(qz);
  const std::size_t simd_end = n - n % 4;
  for (std::size_t i = 0; i < simd_end; i += 4) {
    const __m256d dx = _mm256_sub_pd(_mm256_loadu_pd(xs + i), vx);
    const __m256d dy = _mm256_sub_pd(_mm256_loadu_pd(ys + i), vy);
    const __m256d dz = _mm256_sub_pd(_mm256_loadu_pd(zs + i), vz);
    const __m256d s = _mm256_add_pd(_mm256_add_pd(_mm256_mul_pd(dx, dx), _mm256_mul_pd(dy, dy)),
                                    _mm256_mul_pd(dz, dz));
    _mm256_storeu_pd(out + i, s);
  }
  for (std::size_t i = simd_end; i < n; ++i) {
    const double dx = xs[i] - qx;
    const double dy = ys[i] - qy;
    const double dz = zs[i] - qz;
    out[i] = (dx * dx + dy * dy) + dz * dz;
  }
}

}  // namespace

const KernelTable* avx2_table() noexcept {
  static const KernelTable table{Isa::avx2, min_max_avx2, classify_avx2, phase_terms_avx2,
                                 squared_distances_avx2};
  return &table;
}

}  // namespace slscan::kernels
