#include "slscan/error.hpp"
#include "slscan/kernels.hpp"

#include <gtest/gtest.h>

#include <cstring>
#include <random>
#include <vector>

namespace slscan::kernels {
namespace {

const KernelTable* simd() {
  const KernelTable* t = avx2_table();
  return t && cpu_supports(Isa::avx2) ? t : nullptr;
}

// Odd lengths exercise the scalar tails of the vector loops.
constexpr std::size_t kLengths[] = {0, 1, 7, 16, 31, 32, 33, 1000, 4099};

TEST(Kernels, DetectedIsaIsSupported) {
  EXPECT_TRUE(cpu_supports(detected_isa()));
  EXPECT_EQ(active().isa, detected_isa());
  EXPECT_EQ(to_string(Isa::scalar), "scalar");
}

TEST(Kernels, ForceScalarAndReset) {
  force_isa(Isa::scalar);
  EXPECT_EQ(active().isa, Isa::scalar);
  reset_isa();
  EXPECT_EQ(active().isa, detected_isa());
  if (!simd()) {
    EXPECT_THROW(force_isa(Isa::avx2), Error);
  }
}

TEST(Kernels, StackMinMaxEquivalent) {
  if (!simd()) GTEST_SKIP() << "no AVX2";
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<int> b(0, 255);
  for (std::size_t n : kLengths) {
    std::vector<std::vector<std::uint8_t>> planes(5, std::vector<std::uint8_t>(n));
    for (auto& p : planes) {
      for (auto& v : p) v = static_cast<std::uint8_t>(b(rng));
    }
    std::vector<const std::uint8_t*> ptrs;
    for (auto& p : planes) ptrs.push_back(p.data());
    std::vector<std::uint8_t> lo0(n), hi0(n), lo1(n), hi1(n);
    scalar_table().stack_min_max(ptrs, n, lo0.data(), hi0.data());
    simd()->stack_min_max(ptrs, n, lo1.data(), hi1.data());
    EXPECT_EQ(lo0, lo1);
    EXPECT_EQ(hi0, hi1);
    for (std::size_t i = 0; i < n; ++i) {
      std::uint8_t lo = 255, hi = 0;
      for (auto& p : planes) {
        lo = std::min(lo, p[i]);
        hi = std::max(hi, p[i]);
      }
      ASSERT_EQ(lo0[i], lo);
      ASSERT_EQ(hi0[i], hi);
    }
  }
}

TEST(Kernels, ClassifyBitsEquivalent) {
  if (!simd()) GTEST_SKIP() << "no AVX2";
  std::mt19937_64 rng(2);
  std::uniform_int_distribution<int> b(0, 255), g(0, 510), m(0, 20);
  for (std::size_t n : kLengths) {
    std::vector<std::uint8_t> p(n), q(n), out0(n), out1(n);
    std::vector<std::int16_t> d(n), gl(n);
    for (std::size_t i = 0; i < n; ++i) {
      p[i] = static_cast<std::uint8_t>(b(rng));
      q[i] = static_cast<std::uint8_t>(b(rng));
      d[i] = static_cast<std::int16_t>(b(rng));
      gl[i] = static_cast<std::int16_t>(g(rng));
    }
    const auto thr = static_cast<std::int16_t>(m(rng));
    scalar_table().classify_bits(p.data(), q.data(), d.data(), gl.data(), thr, out0.data(), n);
    simd()->classify_bits(p.data(), q.data(), d.data(), gl.data(), thr, out1.data(), n);
    EXPECT_EQ(out0, out1);
  }
}

TEST(Kernels, ClassifyBitsExhaustiveGrid) {
  if (!simd()) GTEST_SKIP() << "no AVX2";
  const int levels[] = {0, 1, 4, 5, 6, 63, 64, 65, 127, 128, 129, 192, 254, 255};
  std::vector<std::uint8_t> p, q;
  std::vector<std::int16_t> d, g;
  for (int a : levels) {
    for (int c : levels) {
      for (int e : levels) {
        for (int f : levels) {
          p.push_back(static_cast<std::uint8_t>(a));
          q.push_back(static_cast<std::uint8_t>(c));
          d.push_back(static_cast<std::int16_t>(e));
          g.push_back(static_cast<std::int16_t>(2 * f));
        }
      }
    }
  }
  const std::size_t n = p.size();
  std::vector<std::uint8_t> out0(n), out1(n);
  scalar_table().classify_bits(p.data(), q.data(), d.data(), g.data(), 5, out0.data(), n);
  simd()->classify_bits(p.data(), q.data(), d.data(), g.data(), 5, out1.data(), n);
  EXPECT_EQ(out0, out1);
}

TEST(Kernels, PhaseTermsBitIdentical) {
  if (!simd()) GTEST_SKIP() << "no AVX2";
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 255.0);
  for (std::size_t n : kLengths) {
    std::vector<double> a(n), b(n), c(n), n0(n), d0(n), n1(n), d1(n);
    for (std::size_t i = 0; i < n; ++i) {
      a[i] = u(rng);
      b[i] = u(rng);
      c[i] = std::floor(u(rng));
    }
    scalar_table().phase_terms(a.data(), b.data(), c.data(), n0.data(), d0.data(), n);
    simd()->phase_terms(a.data(), b.data(), c.data(), n1.data(), d1.data(), n);
    EXPECT_EQ(0, std::memcmp(n0.data(), n1.data(), n * sizeof(double)));
    EXPECT_EQ(0, std::memcmp(d0.data(), d1.data(), n * sizeof(double)));
  }
}

TEST(Kernels, SquaredDistancesBitIdentical) {
  if (!simd()) GTEST_SKIP() << "no AVX2";
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-1e3, 1e3);
  for (std::size_t n : kLengths) {
    std::vector<double> x(n), y(n), z(n), o0(n), o1(n);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = u(rng);
      y[i] = u(rng);
      z[i] = u(rng);
    }
    const double qx = u(rng), qy = u(rng), qz = u(rng);
    scalar_table().squared_distances(x.data(), y.data(), z.data(), n, qx, qy, qz, o0.data());
    simd()->squared_distances(x.data(), y.data(), z.data(), n, qx, qy, qz, o1.data());
    EXPECT_EQ(0, std::memcmp(o0.data(), o1.data(), n * sizeof(double)));
    for (std::size_t i = 0; i < n; ++i) {
      const double dx = x[i] - qx, dy = y[i] - qy, dz = z[i] - qz;
      ASSERT_EQ(o0[i], (dx * dx + dy * dy) + dz * dz);
    }
  }
}

}  // namespace
}  // namespace slscan::kernels
