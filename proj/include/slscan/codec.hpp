#pragma once

#include "slscan/image.hpp"

#include <array>
#include <cstdint>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace slscan::codec {

enum class Axis { x, y };

enum class PatternKind {
  gray_x,
  gray_y,
  gray_x_inverse,
  gray_y_inverse,
  phase_x,
  phase_y,
  reference_white,
  reference_black,
};

std::string_view to_string(PatternKind kind) noexcept;
// Throws InvalidArgument for unknown names.
PatternKind pattern_kind_from_string(std::string_view name);

// One image of a projected or captured stack. `index` is the bit position
// (0 = most significant) for gray kinds and the shift index (0, 1, 2 for
// -2pi/3, 0, +2pi/3) for phase kinds.
struct PatternFrame {
  GrayImage image;
  PatternKind kind = PatternKind::reference_white;
  int index = 0;
};

struct PatternStack {
  std::vector<PatternFrame> frames;
  int projector_width = 0;
  int projector_height = 0;
  int bits_x = 0;
  int bits_y = 0;
  double fringe_width = 0.0;

  const PatternFrame* find(PatternKind kind, int index = 0) const;
  bool has(PatternKind kind) const;
  // Frames from `other` whose (kind, index) is not already present.
  void merge(const PatternStack& other);
};

struct PhasePatternParams {
  double bias = 127.0;       // I'
  double amplitude = 127.0;  // I''
  double fringe_width = 20.0;
};

inline constexpr std::array<double, 3> kPhaseShifts = {-2.0 * std::numbers::pi / 3.0, 0.0,
                                                       2.0 * std::numbers::pi / 3.0};

// ceil(log2(extent)), minimum 1.
int bits_for_extent(int extent);

std::uint32_t gray_code(std::uint32_t n) noexcept;
std::uint32_t gray_to_binary(std::uint32_t g) noexcept;

// Reflected binary code of `index`, MSB first, zero padded to `bits`.
// Throws OutOfRange if index >= 2^bits.
std::string gray_encode(std::uint32_t index, int bits);
// Throws MalformedCode on empty input or characters other than '0'/'1'.
std::uint32_t gray_decode(std::string_view code);

// Gray patterns for one axis, MSB first, followed by the inverses (when
// requested) and the all-white / all-black references.
PatternStack generate_gray_stack(int projector_width, int projector_height, Axis axis,
                                 bool with_inverses);

// Sinusoid I' + I'' cos(2 pi coord / fringe + shift) at full precision.
double phase_pattern_value(double coord, const PhasePatternParams& params, int shift_index);

// Three 8-bit phase-shifted images; throws ClippingError when the sinusoid
// would leave [0, 255].
PatternStack generate_phase_stack(int projector_width, int projector_height, Axis axis,
                                  const PhasePatternParams& params);

enum class PixelStatus : std::uint8_t {
  valid = 0,
  uncertain_bit = 1,
  low_modulation = 2,
  low_direct = 3,
  out_of_range = 4,
  undecoded = 5,
};

std::string_view to_string(PixelStatus status) noexcept;

// Per camera pixel decoded projector coordinates. Coordinates follow the
// pixel-center convention: projector column c is reported as c + 0.5.
struct CorrespondenceMap {
  int width = 0;
  int height = 0;
  int projector_width = 0;
  int projector_height = 0;
  bool has_x = false;
  bool has_y = false;
  std::vector<double> proj_x;
  std::vector<double> proj_y;
  std::vector<PixelStatus> status;
  std::vector<float> direct;
  std::vector<float> global;
  std::vector<std::int32_t> fringe_order;  // empty unless phase decoding ran

  static CorrespondenceMap make(int width, int height, int projector_width, int projector_height);

  std::size_t size() const noexcept { return status.size(); }
  bool valid(std::size_t i) const noexcept { return status[i] == PixelStatus::valid; }
  std::size_t valid_count() const noexcept;
};

struct DirectGlobal {
  int width = 0;
  int height = 0;
  std::vector<std::int16_t> direct;
  std::vector<std::int16_t> global;
};

// Binary 50%-duty separation: direct = Lmax - Lmin, global = 2 Lmin.
DirectGlobal separate_direct_global(std::span<const GrayImage* const> images);

// Uses the `high_frequency_bits` least significant gray patterns of every
// axis present, together with their inverses.
DirectGlobal separate_direct_global(const PatternStack& captured, int high_frequency_bits = 2);

enum class BitValue : std::uint8_t { zero = 0, one = 1, uncertain = 2 };

// p: intensity under the pattern, q: under the inverse, d/g: direct and
// global estimates, m: minimum direct component.
BitValue classify_bit(double p, double q, double d, double g, double m) noexcept;

struct GrayDecodeParams {
  double min_direct = 5.0;
  int high_frequency_bits = 2;
};

// Robust per-pixel decoding of gray stacks (with inverses) for every axis
// the stack carries. Throws StackMismatch on inconsistent stacks.
CorrespondenceMap decode_gray(const PatternStack& captured, const GrayDecodeParams& params = {});
CorrespondenceMap decode_gray(const PatternStack& captured, const DirectGlobal& separation,
                              double min_direct);

// Mid-level thresholding against the white/black references, no inverse
// patterns or light separation. Kept as a baseline for robustness checks.
CorrespondenceMap decode_gray_naive(const PatternStack& captured, double min_contrast = 5.0);

struct WrappedPhase {
  int width = 0;
  int height = 0;
  std::vector<double> phase;       // [0, 2pi)
  std::vector<double> modulation;  // estimated I''
  std::vector<std::uint8_t> valid;
};

WrappedPhase decode_phase(const ImageF& i1, const ImageF& i2, const ImageF& i3,
                          double min_modulation = 0.0);
WrappedPhase decode_phase(const GrayImage& i1, const GrayImage& i2, const GrayImage& i3,
                          double min_modulation = 0.0);

// fringe_width * (phase + 2 pi K) / 2 pi, in projector column units (the
// column whose sinusoid sample produced the phase). NaN where invalid.
double unwrap_phase_value(double phase, std::int32_t fringe_order, double fringe_width) noexcept;
std::vector<double> unwrap_phase(const WrappedPhase& wrapped, std::span<const std::int32_t> orders,
                                 double fringe_width);

// K = floor(gray_column / fringe_width), corrected by one period when the
// wrapped phase places the pixel on the other side of a fringe boundary.
std::int32_t fringe_order_from_gray(double gray_column, double phase, double fringe_width) noexcept;
std::vector<std::int32_t> fringe_orders_from_gray(const CorrespondenceMap& gray, Axis axis,
                                                  const WrappedPhase& wrapped,
                                                  double fringe_width);

struct PhaseDecodeParams {
  GrayDecodeParams gray;
  double min_modulation = 10.0;
};

// Gray decoding for integer fringe orders, then sub-pixel coordinates from
// the phase images for every axis that has them.
CorrespondenceMap decode_hybrid(const PatternStack& captured, const PhaseDecodeParams& params = {});

}  // namespace slscan::codec
