#include "slscan/codec.hpp"

#include "slscan/error.hpp"

#include <cmath>

namespace slscan::codec {
namespace {

void check_projector_size(int w, int h) {
  if (w < 1 || h < 1) throw Error(ErrorCode::InvalidArgument, "projector size must be positive");
}

}  // namespace

PatternStack generate_gray_stack(int projector_width, int projector_height, Axis axis,
                                 bool with_inverses) {
  check_projector_size(projector_width, projector_height);
  const int extent = axis == Axis::x ? projector_width : projector_height;
  if (extent < 2) throw Error(ErrorCode::InvalidArgument, "coded extent must be at least 2");
  const int bits = bits_for_extent(extent);

  PatternStack stack;
  stack.projector_width = projector_width;
  stack.projector_height = projector_height;
  (axis == Axis::x ? stack.bits_x : stack.bits_y) = bits;

  const PatternKind kind = axis == Axis::x ? PatternKind::gray_x : PatternKind::gray_y;
  const PatternKind inverse = axis == Axis::x ? PatternKind::gray_x_inverse
                                              : PatternKind::gray_y_inverse;

  std::vector<std::uint32_t> codes(static_cast<std::size_t>(extent));
  for (int c = 0; c < extent; ++c) codes[static_cast<std::size_t>(c)] = gray_code(c);

  for (int bit = 0; bit < bits; ++bit) {
    GrayImage img(projector_width, projector_height);
    const int shift = bits - 1 - bit;
    for (int y = 0; y < projector_height; ++y) {
      for (int x = 0; x < projector_width; ++x) {
        const std::uint32_t code = codes[static_cast<std::size_t>(axis == Axis::x ? x : y)];
        img.at(x, y) = ((code >> shift) & 1u) ? 255 : 0;
      }
    }
    stack.frames.push_back({std::move(img), kind, bit});
  }
  if (with_inverses) {
    for (int bit = 0; bit < bits; ++bit) {
      GrayImage img = stack.frames[static_cast<std::size_t>(bit)].image;
      for (auto& v : img.pixels) v = static_cast<std::uint8_t>(255 - v);
      stack.frames.push_back({std::move(img), inverse, bit});
    }
  }
  stack.frames.push_back({GrayImage(projector_width, projector_height, 255),
                          PatternKind::reference_white, 0});
  stack.frames.push_back(
      {GrayImage(projector_width, projector_height, 0), PatternKind::reference_black, 0});
  return stack;
}

double phase_pattern_value(double coord, const PhasePatternParams& params, int shift_index) {
  const double phi = 2.0 * std::numbers::pi * coord / params.fringe_width;
  return params.bias +
         params.amplitude * std::cos(phi + kPhaseShifts.at(static_cast<std::size_t>(shift_index)));
}

PatternStack generate_phase_stack(int projector_width, int projector_height, Axis axis,
                                  const PhasePatternParams& params) {
  check_projector_size(projector_width, projector_height);
  if (!(params.fringe_width > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "fringe width must be positive");
  }
  if (params.bias + params.amplitude > 255.0 || params.bias - params.amplitude < 0.0 ||
      params.amplitude < 0.0) {
    throw Error(ErrorCode::ClippingError, "phase pattern bias/amplitude leave the [0, 255] range");
  }
  PatternStack stack;
  stack.projector_width = projector_width;
  stack.projector_height = projector_height;
  stack.fringe_width = params.fringe_width;
  const PatternKind kind = axis == Axis::x ? PatternKind::phase_x : PatternKind::phase_y;
  const int extent = axis == Axis::x ? projector_width : projector_height;
  for (int s = 0; s < 3; ++s) {
    std::vector<std::uint8_t> profile(static_cast<std::size_t>(extent));
    for (int c = 0; c < extent; ++c) {
      profile[static_cast<std::size_t>(c)] = quantize_intensity(phase_pattern_value(c, params, s));
    }
    GrayImage img(projector_width, projector_height);
    for (int y = 0; y < projector_height; ++y) {
      for (int x = 0; x < projector_width; ++x) {
        img.at(x, y) = profile[static_cast<std::size_t>(axis == Axis::x ? x : y)];
      }
    }
    stack.frames.push_back({std::move(img), kind, s});
  }
  return stack;
}

}  // namespace slscan::codec
