#include "slscan/codec.hpp"

#include "slscan/error.hpp"
#include "slscan/kernels.hpp"
#include "slscan/parallel.hpp"

#include <cmath>
#include <limits>

namespace slscan::codec {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

}  // namespace

WrappedPhase decode_phase(const ImageF& i1, const ImageF& i2, const ImageF& i3,
                          double min_modulation) {
  if (i1.width != i2.width || i1.width != i3.width || i1.height != i2.height ||
      i1.height != i3.height) {
    throw Error(ErrorCode::StackMismatch, "phase images differ in size");
  }
  WrappedPhase out;
  out.width = i1.width;
  out.height = i1.height;
  const std::size_t n = i1.size();
  out.phase.resize(n);
  out.modulation.resize(n);
  out.valid.resize(n);
  const auto& k = kernels::active();
  parallel_for(n, [&](std::size_t b, std::size_t e) {
    std::vector<double> num(e - b), den(e - b);
    k.phase_terms(i1.pixels.data() + b, i2.pixels.data() + b, i3.pixels.data() + b, num.data(),
                  den.data(), e - b);
    for (std::size_t i = b; i < e; ++i) {
      const double s = num[i - b];
      const double c = den[i - b];
      double phi = std::atan2(s, c);
      if (phi < 0.0) phi += kTwoPi;
      if (phi >= kTwoPi || phi == 0.0) phi = 0.0;
      out.phase[i] = phi;
      // num = 3 I'' sin(phi), den = 3 I'' cos(phi).
      const double mod = std::sqrt(s * s + c * c) / 3.0;
      out.modulation[i] = mod;
      out.valid[i] = static_cast<std::uint8_t>(mod > 0.0 && mod >= min_modulation);
    }
  });
  return out;
}

WrappedPhase decode_phase(const GrayImage& i1, const GrayImage& i2, const GrayImage& i3,
                          double min_modulation) {
  return decode_phase(ImageF(i1), ImageF(i2), ImageF(i3), min_modulation);
}

double unwrap_phase_value(double phase, std::int32_t fringe_order, double fringe_width) noexcept {
  return fringe_width * (phase + kTwoPi * fringe_order) / kTwoPi;
}

std::vector<double> unwrap_phase(const WrappedPhase& wrapped, std::span<const std::int32_t> orders,
                                 double fringe_width) {
  if (orders.size() != wrapped.phase.size()) {
    throw Error(ErrorCode::StackMismatch, "fringe-order map does not match the phase map");
  }
  std::vector<double> out(orders.size(), std::numeric_limits<double>::quiet_NaN());
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (wrapped.valid[i] && orders[i] >= 0) {
      out[i] = unwrap_phase_value(wrapped.phase[i], orders[i], fringe_width);
    }
  }
  return out;
}

std::int32_t fringe_order_from_gray(double gray_column, double phase,
                                    double fringe_width) noexcept {
  const double base = std::floor(gray_column / fringe_width);
  const double residue = gray_column - base * fringe_width;
  const double from_phase = fringe_width * phase / kTwoPi;
  auto k = static_cast<std::int32_t>(base);
  if (from_phase - residue > 0.5 * fringe_width) {
    --k;
  } else if (residue - from_phase > 0.5 * fringe_width) {
    ++k;
  }
  return k;
}

std::vector<std::int32_t> fringe_orders_from_gray(const CorrespondenceMap& gray, Axis axis,
                                                  const WrappedPhase& wrapped,
                                                  double fringe_width) {
  if (gray.size() != wrapped.phase.size()) {
    throw Error(ErrorCode::StackMismatch, "gray map does not match the phase map");
  }
  const auto& coord = axis == Axis::x ? gray.proj_x : gray.proj_y;
  std::vector<std::int32_t> orders(gray.size(), -1);
  for (std::size_t i = 0; i < orders.size(); ++i) {
    if (!gray.valid(i)) continue;
    orders[i] = fringe_order_from_gray(coord[i] - 0.5, wrapped.phase[i], fringe_width);
  }
  return orders;
}

CorrespondenceMap decode_hybrid(const PatternStack& captured, const PhaseDecodeParams& params) {
  CorrespondenceMap map = decode_gray(captured, params.gray);
  if (!(captured.fringe_width > 0.0)) {
    throw Error(ErrorCode::StackMismatch, "phase stack carries no fringe width");
  }
  bool stored_orders = false;
  for (Axis axis : {Axis::x, Axis::y}) {
    const PatternKind kind = axis == Axis::x ? PatternKind::phase_x : PatternKind::phase_y;
    if (!captured.has(kind)) continue;
    if (!(axis == Axis::x ? map.has_x : map.has_y)) {
      throw Error(ErrorCode::StackMismatch, "phase axis has no gray code for fringe orders");
    }
    const PatternFrame* f[3];
    for (int s = 0; s < 3; ++s) {
      f[s] = captured.find(kind, s);
      if (f[s] == nullptr) {
        throw Error(ErrorCode::StackMismatch, std::string(to_string(kind)) + " shift missing");
      }
      if (f[s]->image.width != map.width || f[s]->image.height != map.height) {
        throw Error(ErrorCode::StackMismatch, "phase images differ from the gray images in size");
      }
    }
    const WrappedPhase wrapped =
        decode_phase(f[0]->image, f[1]->image, f[2]->image, params.min_modulation);
    const auto orders = fringe_orders_from_gray(map, axis, wrapped, captured.fringe_width);
    const auto coords = unwrap_phase(wrapped, orders, captured.fringe_width);
    auto& target = axis == Axis::x ? map.proj_x : map.proj_y;
    const int extent = axis == Axis::x ? map.projector_width : map.projector_height;
    for (std::size_t i = 0; i < map.size(); ++i) {
      if (!map.valid(i)) continue;
      if (!wrapped.valid[i]) {
        map.status[i] = PixelStatus::low_modulation;
        continue;
      }
      const double c = coords[i] + 0.5;
      if (!(c >= 0.0 && c < extent)) {
        map.status[i] = PixelStatus::out_of_range;
        continue;
      }
      target[i] = c;
    }
    if (!stored_orders) {
      map.fringe_order = orders;
      stored_orders = true;
    }
  }
  return map;
}

}  // namespace slscan::codec
