#include "slscan/codec.hpp"
#include "slscan/error.hpp"
#include "slscan/kernels.hpp"

#include <gtest/gtest.h>

#include <bit>
#include <cmath>
#include <numbers>

namespace slscan::codec {
namespace {

constexpr double kPi = std::numbers::pi;

TEST(GrayEncode, WorkedExamples) {
  EXPECT_EQ(gray_encode(1152, 11), "11011000000");
  EXPECT_EQ(gray_encode(648, 11), "01111001100");
  EXPECT_EQ(gray_encode(0, 11), "00000000000");
}

TEST(GrayEncode, OutOfRange) {
  try {
    gray_encode(2048, 11);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::OutOfRange);
  }
  EXPECT_NO_THROW(gray_encode(2047, 11));
}

TEST(GrayDecode, WorkedExamples) {
  EXPECT_EQ(gray_decode("11011000000"), 1152u);
  EXPECT_EQ(gray_decode("01111001100"), 648u);
  EXPECT_EQ(gray_decode("0"), 0u);
  EXPECT_EQ(gray_decode("0000000000000"), 0u);
}

TEST(GrayDecode, MalformedCode) {
  for (const char* bad : {"", "0120", "1 0", "abc"}) {
    try {
      gray_decode(bad);
      FAIL() << bad;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::MalformedCode);
    }
  }
}

TEST(GrayCode, ExhaustiveRoundTripAndAdjacency) {
  for (int b = 1; b <= 12; ++b) {
    const std::uint32_t n = 1u << b;
    for (std::uint32_t i = 0; i < n; ++i) {
      const std::string s = gray_encode(i, b);
      ASSERT_EQ(s.size(), static_cast<std::size_t>(b));
      ASSERT_EQ(gray_decode(s), i);
      ASSERT_EQ(gray_to_binary(gray_code(i)), i);
      if (i + 1 < n) {
        ASSERT_EQ(std::popcount(gray_code(i) ^ gray_code(i + 1)), 1);
      }
    }
  }
}

TEST(BitsForExtent, Values) {
  EXPECT_EQ(bits_for_extent(1920), 11);
  EXPECT_EQ(bits_for_extent(1080), 11);
  EXPECT_EQ(bits_for_extent(1024), 10);
  EXPECT_EQ(bits_for_extent(8), 3);
  EXPECT_EQ(bits_for_extent(2), 1);
  EXPECT_EQ(bits_for_extent(1), 1);
}

int count_kind(const PatternStack& s, PatternKind k) {
  int n = 0;
  for (const auto& f : s.frames) n += f.kind == k;
  return n;
}

TEST(GrayStack, ElevenImagesAt1920) {
  const auto s = generate_gray_stack(1920, 1080, Axis::x, false);
  EXPECT_EQ(count_kind(s, PatternKind::gray_x), 11);
  EXPECT_EQ(s.bits_x, 11);
  EXPECT_TRUE(s.has(PatternKind::reference_white));
  EXPECT_TRUE(s.has(PatternKind::reference_black));
  EXPECT_EQ(s.frames.front().image.width, 1920);
  EXPECT_EQ(s.frames.front().image.height, 1080);
}

TEST(GrayStack, EightColumns) {
  const auto s = generate_gray_stack(8, 1, Axis::x, false);
  EXPECT_EQ(count_kind(s, PatternKind::gray_x), 3);
  const auto* f = s.find(PatternKind::gray_x, 0);
  ASSERT_NE(f, nullptr);
  const std::vector<std::uint8_t> row = {0, 0, 0, 0, 255, 255, 255, 255};
  EXPECT_EQ(f->image.pixels, row);
}

TEST(GrayStack, Column1152) {
  const auto s = generate_gray_stack(1920, 1080, Axis::x, true);
  EXPECT_EQ(s.find(PatternKind::gray_x, 0)->image.at(1152, 0), 255);
  EXPECT_EQ(s.find(PatternKind::gray_x, 1)->image.at(1152, 0), 255);
  EXPECT_EQ(s.find(PatternKind::gray_x, 2)->image.at(1152, 0), 0);
}

TEST(GrayStack, ColumnsReproduceCodesAndInverses) {
  const auto s = generate_gray_stack(1920, 4, Axis::x, true);
  for (int c = 0; c < 1920; ++c) {
    std::string bits;
    for (int i = 0; i < 11; ++i) {
      const auto& img = s.find(PatternKind::gray_x, i)->image;
      const auto& inv = s.find(PatternKind::gray_x_inverse, i)->image;
      for (int y = 0; y < 4; ++y) {
        ASSERT_EQ(inv.at(c, y), 255 - img.at(c, y));
        ASSERT_EQ(img.at(c, y), img.at(c, 0));
      }
      bits += img.at(c, 0) == 255 ? '1' : '0';
    }
    ASSERT_EQ(bits, gray_encode(static_cast<std::uint32_t>(c), 11));
  }
}

TEST(GrayStack, RowsForYAxis) {
  const auto s = generate_gray_stack(4, 1080, Axis::y, false);
  EXPECT_EQ(count_kind(s, PatternKind::gray_y), 11);
  for (int r = 0; r < 1080; r += 37) {
    std::string bits;
    for (int i = 0; i < 11; ++i) bits += s.find(PatternKind::gray_y, i)->image.at(2, r) ? '1' : '0';
    EXPECT_EQ(bits, gray_encode(static_cast<std::uint32_t>(r), 11));
  }
}

TEST(PhaseStack, PatternValues) {
  const PhasePatternParams p;
  EXPECT_DOUBLE_EQ(phase_pattern_value(0.0, p, 1), 254.0);
  EXPECT_NEAR(phase_pattern_value(5.0, p, 1), 127.0, 1e-12);
  // Direct evaluation of I' + I'' cos(phi + shift) at x = 5.
  EXPECT_NEAR(phase_pattern_value(5.0, p, 0), 127.0 + 127.0 * std::cos(kPi / 2 - 2 * kPi / 3), 1e-12);
  EXPECT_NEAR(phase_pattern_value(5.0, p, 0), 236.98522628062372, 1e-9);
  EXPECT_NEAR(phase_pattern_value(5.0, p, 2), 17.014773719376265, 1e-9);
}

TEST(PhaseStack, RoundedImages) {
  const auto s = generate_phase_stack(40, 2, Axis::x, {});
  ASSERT_EQ(count_kind(s, PatternKind::phase_x), 3);
  EXPECT_EQ(s.find(PatternKind::phase_x, 0)->image.at(5, 0), 237);
  EXPECT_EQ(s.find(PatternKind::phase_x, 1)->image.at(5, 0), 127);
  EXPECT_EQ(s.find(PatternKind::phase_x, 2)->image.at(5, 1), 17);
  EXPECT_EQ(s.find(PatternKind::phase_x, 1)->image.at(0, 0), 254);
  EXPECT_EQ(s.fringe_width, 20.0);
}

TEST(PhaseStack, ClippingError) {
  PhasePatternParams p;
  p.bias = 130.0;
  try {
    generate_phase_stack(40, 2, Axis::x, p);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ClippingError);
  }
  p.bias = 100.0;
  p.amplitude = 110.0;
  EXPECT_THROW(generate_phase_stack(40, 2, Axis::x, p), Error);
}

TEST(DirectGlobal, ConstantAndAlternating) {
  GrayImage a(2, 1), b(2, 1), c(2, 1);
  a.pixels = {40, 255};
  b.pixels = {40, 0};
  c.pixels = {40, 255};
  const GrayImage* imgs[] = {&a, &b, &c};
  const auto dg = separate_direct_global(imgs);
  EXPECT_EQ(dg.direct[0], 0);
  EXPECT_EQ(dg.global[0], 80);
  EXPECT_EQ(dg.direct[1], 255);
  EXPECT_EQ(dg.global[1], 0);
}

// Rule-by-rule reference for the robust classification.
BitValue reference_rule(double p, double q, double d, double g, double m) {
  if (d < m) return BitValue::uncertain;
  if (d > g) return p > q ? BitValue::one : BitValue::zero;
  if (p < d && q > g) return BitValue::zero;
  if (p > g && q < d) return BitValue::one;
  return BitValue::uncertain;
}

TEST(ClassifyBit, Examples) {
  EXPECT_EQ(classify_bit(200, 50, 100, 10, 5), BitValue::one);
  EXPECT_EQ(classify_bit(50, 200, 100, 10, 5), BitValue::zero);
  EXPECT_EQ(classify_bit(123, 45, 2, 50, 5), BitValue::uncertain);
}

TEST(ClassifyBit, TruthTableGrid) {
  const double levels[] = {0, 64, 128, 192, 255};
  for (double p : levels) {
    for (double q : levels) {
      for (double d : levels) {
        for (double g : levels) {
          for (double m : {0.0, 5.0, 128.0}) {
            ASSERT_EQ(classify_bit(p, q, d, g, m), reference_rule(p, q, d, g, m))
                << p << " " << q << " " << d << " " << g << " " << m;
          }
        }
      }
    }
  }
}

TEST(ClassifyBit, KernelMatchesScalarRule) {
  const int levels[] = {0, 3, 64, 100, 128, 192, 255};
  for (int p : levels) {
    for (int q : levels) {
      for (int d : levels) {
        for (int g : {0, 50, 128, 300, 510}) {
          const std::uint8_t pp = static_cast<std::uint8_t>(p), qq = static_cast<std::uint8_t>(q);
          const std::int16_t dd = static_cast<std::int16_t>(d), gg = static_cast<std::int16_t>(g);
          std::uint8_t out = 9;
          kernels::scalar_table().classify_bits(&pp, &qq, &dd, &gg, 5, &out, 1);
          ASSERT_EQ(out, static_cast<std::uint8_t>(reference_rule(p, q, d, g, 5)));
        }
      }
    }
  }
}

// A camera that sees the projector one to one: captured = projected.
PatternStack identity_capture(int w, int h) {
  PatternStack s = generate_gray_stack(w, h, Axis::x, true);
  s.merge(generate_gray_stack(w, h, Axis::y, true));
  return s;
}

TEST(DecodeGray, IdentityCaptureIsExact) {
  const auto s = identity_capture(64, 48);
  const auto corr = decode_gray(s);
  ASSERT_EQ(corr.width, 64);
  ASSERT_TRUE(corr.has_x && corr.has_y);
  for (int y = 0; y < 48; ++y) {
    for (int x = 0; x < 64; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * 64 + x;
      ASSERT_TRUE(corr.valid(i));
      ASSERT_EQ(corr.proj_x[i], x + 0.5);
      ASSERT_EQ(corr.proj_y[i], y + 0.5);
    }
  }
  EXPECT_EQ(corr.valid_count(), 64u * 48u);
}

TEST(DecodeGray, AllBlackIsInvalid) {
  auto s = identity_capture(32, 16);
  for (auto& f : s.frames) std::fill(f.image.pixels.begin(), f.image.pixels.end(), 0);
  const auto corr = decode_gray(s);
  EXPECT_EQ(corr.valid_count(), 0u);
  for (auto st : corr.status) EXPECT_NE(st, PixelStatus::valid);
}

TEST(DecodeGray, KernelIsaDoesNotChangeResult) {
  auto s = identity_capture(96, 40);
  // Some contrast loss so the robust rules have work to do.
  for (auto& f : s.frames) {
    for (std::size_t i = 0; i < f.image.pixels.size(); ++i) {
      f.image.pixels[i] = static_cast<std::uint8_t>(20 + f.image.pixels[i] * (i % 7) / 8);
    }
  }
  kernels::force_isa(kernels::Isa::scalar);
  const auto a = decode_gray(s);
  kernels::reset_isa();
  const auto b = decode_gray(s);
  EXPECT_EQ(a.status, b.status);
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a.valid(i)) {
      ASSERT_EQ(a.proj_x[i], b.proj_x[i]);
      ASSERT_EQ(a.proj_y[i], b.proj_y[i]);
    }
  }
}

TEST(DecodeGray, StackMismatch) {
  auto s = identity_capture(32, 16);
  s.frames[3].image = GrayImage(31, 16);
  try {
    decode_gray(s);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::StackMismatch);
  }
}

TEST(DecodeGrayNaive, IdentityCapture) {
  const auto corr = decode_gray_naive(identity_capture(32, 16));
  EXPECT_EQ(corr.valid_count(), 32u * 16u);
  EXPECT_EQ(corr.proj_x[5], 5.5);
}

TEST(DecodePhase, ZeroPhase) {
  ImageF a(1, 1, 100.0), b(1, 1, 200.0), c(1, 1, 100.0);
  const auto w = decode_phase(a, b, c);
  EXPECT_EQ(w.phase[0], 0.0);
}

TEST(DecodePhase, FullPrecisionRamp) {
  const PhasePatternParams p;
  const int n = 200;
  ImageF a(n, 1), b(n, 1), c(n, 1);
  for (int x = 0; x < n; ++x) {
    const double u = x * 0.1;
    a.at(x, 0) = phase_pattern_value(u, p, 0);
    b.at(x, 0) = phase_pattern_value(u, p, 1);
    c.at(x, 0) = phase_pattern_value(u, p, 2);
  }
  const auto w = decode_phase(a, b, c);
  for (int x = 0; x < n; ++x) {
    const double expect = std::fmod(2 * kPi * x * 0.1 / 20.0, 2 * kPi);
    double d = std::abs(w.phase[x] - expect);
    d = std::min(d, 2 * kPi - d);
    ASSERT_LT(d, 1e-9) << x;
    ASSERT_GE(w.phase[x], 0.0);
    ASSERT_LT(w.phase[x], 2 * kPi);
    if (x > 0) {
      ASSERT_GT(w.phase[x], w.phase[x - 1]) << x;
    }
    EXPECT_NEAR(w.modulation[x], 127.0, 1e-9);
  }
}

TEST(DecodePhase, QuantizedWithinTolerance) {
  const auto s = generate_phase_stack(1920, 1, Axis::x, {});
  const auto w = decode_phase(s.find(PatternKind::phase_x, 0)->image, s.find(PatternKind::phase_x, 1)->image,
                              s.find(PatternKind::phase_x, 2)->image);
  EXPECT_NEAR(w.phase[5], kPi / 2, 0.02);
  for (int x = 0; x < 1920; ++x) {
    const double expect = std::fmod(2 * kPi * x / 20.0, 2 * kPi);
    double d = std::abs(w.phase[x] - expect);
    d = std::min(d, 2 * kPi - d);
    ASSERT_LT(d, 0.02) << x;
  }
  for (int x = 1; x < 20; ++x) EXPECT_GT(w.phase[x], w.phase[x - 1]);
}

TEST(DecodePhase, LowModulationInvalid) {
  GrayImage a(1, 1, 120), b(1, 1, 122), c(1, 1, 121);
  const auto w = decode_phase(a, b, c, 10.0);
  EXPECT_FALSE(w.valid[0]);
}

TEST(UnwrapPhase, Values) {
  EXPECT_NEAR(unwrap_phase_value(kPi / 2, 0, 20.0), 5.0, 1e-12);
  EXPECT_NEAR(unwrap_phase_value(kPi / 2, 57, 20.0), 1145.0, 1e-9);
}

TEST(FringeOrder, FromGray) {
  EXPECT_EQ(fringe_order_from_gray(1152.5, 2 * kPi * 12.5 / 20.0, 20.0), 57);
  EXPECT_EQ(fringe_order_from_gray(1152.0, 2 * kPi * 12.0 / 20.0, 20.0), 57);
  // Gray says 19 but the phase has already wrapped into the next fringe.
  EXPECT_EQ(fringe_order_from_gray(19.0, 0.05, 20.0), 1);
  EXPECT_EQ(fringe_order_from_gray(19.5, 0.05, 20.0), 1);
  // And the opposite side of a boundary.
  EXPECT_EQ(fringe_order_from_gray(20.5, 2 * kPi - 0.05, 20.0), 0);
}

TEST(FringeOrder, RangeAt1920) {
  for (int c = 0; c < 1920; ++c) {
    const double phi = std::fmod(2 * kPi * (c + 0.5) / 20.0, 2 * kPi);
    const int k = fringe_order_from_gray(c + 0.5, phi, 20.0);
    ASSERT_EQ(k, c / 20);
    ASSERT_GE(k, 0);
    ASSERT_LT(k, 96);
  }
}

TEST(DecodeHybrid, IdentityCaptureSubPixel) {
  const int w = 160, h = 8;
  PatternStack s = identity_capture(w, h);
  s.merge(generate_phase_stack(w, h, Axis::x, {}));
  s.merge(generate_phase_stack(w, h, Axis::y, {}));
  const auto corr = decode_hybrid(s);
  ASSERT_FALSE(corr.fringe_order.empty());
  std::size_t good = 0, valid = 0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      if (!corr.valid(i)) continue;
      ++valid;
      // Column x is reported at its center, x + 0.5.
      if (std::abs(corr.proj_x[i] - (x + 0.5)) <= 0.05) ++good;
    }
  }
  EXPECT_GT(valid, 0.99 * w * h);
  EXPECT_EQ(good, valid);
}

TEST(PatternKind, Names) {
  for (auto k : {PatternKind::gray_x, PatternKind::gray_y, PatternKind::gray_x_inverse,
                 PatternKind::gray_y_inverse, PatternKind::phase_x, PatternKind::phase_y,
                 PatternKind::reference_white, PatternKind::reference_black}) {
    EXPECT_EQ(pattern_kind_from_string(to_string(k)), k);
  }
  EXPECT_THROW(pattern_kind_from_string("stripes"), Error);
}

}  // namespace
}  // namespace slscan::codec
