#include "slscan/codec.hpp"

#include "slscan/error.hpp"
#include "slscan/kernels.hpp"
#include "slscan/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace slscan::codec {

CorrespondenceMap CorrespondenceMap::make(int width, int height, int projector_width,
                                          int projector_height) {
  CorrespondenceMap map;
  map.width = width;
  map.height = height;
  map.projector_width = projector_width;
  map.projector_height = projector_height;
  const std::size_t n = static_cast<std::size_t>(width) * height;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  map.proj_x.assign(n, nan);
  map.proj_y.assign(n, nan);
  map.status.assign(n, PixelStatus::undecoded);
  map.direct.assign(n, 0.0f);
  map.global.assign(n, 0.0f);
  return map;
}

std::size_t CorrespondenceMap::valid_count() const noexcept {
  return static_cast<std::size_t>(
      std::count(status.begin(), status.end(), PixelStatus::valid));
}

BitValue classify_bit(double p, double q, double d, double g, double m) noexcept {
  if (d < m) return BitValue::uncertain;
  if (d > g) return p > q ? BitValue::one : BitValue::zero;
  if (p < d && q > g) return BitValue::zero;
  if (p > g && q < d) return BitValue::one;
  return BitValue::uncertain;
}

DirectGlobal separate_direct_global(std::span<const GrayImage* const> images) {
  if (images.empty()) throw Error(ErrorCode::StackMismatch, "no images to separate");
  const int w = images[0]->width;
  const int h = images[0]->height;
  std::vector<const std::uint8_t*> planes;
  for (const GrayImage* img : images) {
    if (img->width != w || img->height != h) {
      throw Error(ErrorCode::StackMismatch, "separation images differ in size");
    }
    planes.push_back(img->pixels.data());
  }
  const std::size_t n = static_cast<std::size_t>(w) * h;
  std::vector<std::uint8_t> lo(n), hi(n);
  const auto& k = kernels::active();
  parallel_for(n, [&](std::size_t b, std::size_t e) {
    std::vector<const std::uint8_t*> sub(planes.size());
    for (std::size_t i = 0; i < planes.size(); ++i) sub[i] = planes[i] + b;
    k.stack_min_max(sub, e - b, lo.data() + b, hi.data() + b);
  });
  DirectGlobal out;
  out.width = w;
  out.height = h;
  out.direct.resize(n);
  out.global.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.direct[i] = static_cast<std::int16_t>(hi[i] - lo[i]);
    out.global[i] = static_cast<std::int16_t>(2 * lo[i]);
  }
  return out;
}

namespace {

struct AxisFrames {
  Axis axis;
  int bits = 0;
  int extent = 0;
  std::vector<const GrayImage*> pattern;
  std::vector<const GrayImage*> inverse;
};

std::optional<AxisFrames> collect_axis(const PatternStack& s, Axis axis, bool need_inverse) {
  const PatternKind kind = axis == Axis::x ? PatternKind::gray_x : PatternKind::gray_y;
  const PatternKind inv = axis == Axis::x ? PatternKind::gray_x_inverse
                                          : PatternKind::gray_y_inverse;
  if (!s.has(kind)) return std::nullopt;
  AxisFrames f;
  f.axis = axis;
  int declared = axis == Axis::x ? s.bits_x : s.bits_y;
  int present = 0;
  for (const auto& frame : s.frames) {
    if (frame.kind == kind) present = std::max(present, frame.index + 1);
  }
  f.bits = declared > 0 ? declared : present;
  if (present != f.bits) {
    throw Error(ErrorCode::StackMismatch, std::string(to_string(kind)) + " has " +
                                              std::to_string(present) + " bits, expected " +
                                              std::to_string(f.bits));
  }
  const int dim = axis == Axis::x ? s.projector_width : s.projector_height;
  f.extent = dim > 0 ? dim : (1 << f.bits);
  if (f.extent > (1 << f.bits)) {
    throw Error(ErrorCode::StackMismatch, "projector extent exceeds the coded range");
  }
  for (int b = 0; b < f.bits; ++b) {
    const PatternFrame* p = s.find(kind, b);
    if (p == nullptr) {
      throw Error(ErrorCode::StackMismatch,
                  std::string(to_string(kind)) + " bit " + std::to_string(b) + " missing");
    }
    f.pattern.push_back(&p->image);
    if (need_inverse) {
      const PatternFrame* q = s.find(inv, b);
      if (q == nullptr) {
        throw Error(ErrorCode::StackMismatch,
                    std::string(to_string(inv)) + " bit " + std::to_string(b) + " missing");
      }
      f.inverse.push_back(&q->image);
    }
  }
  return f;
}

std::vector<AxisFrames> collect_axes(const PatternStack& s, bool need_inverse) {
  std::vector<AxisFrames> axes;
  for (Axis a : {Axis::x, Axis::y}) {
    if (auto f = collect_axis(s, a, need_inverse)) axes.push_back(std::move(*f));
  }
  if (axes.empty()) throw Error(ErrorCode::StackMismatch, "stack carries no gray patterns");
  return axes;
}

void check_dims(const std::vector<AxisFrames>& axes, int w, int h) {
  for (const auto& a : axes) {
    for (const auto* v : {&a.pattern, &a.inverse}) {
      for (const GrayImage* img : *v) {
        if (img->width != w || img->height != h) {
          throw Error(ErrorCode::StackMismatch, "captured images differ in size");
        }
      }
    }
  }
}

void store_axis(CorrespondenceMap& map, Axis axis, const std::vector<std::uint32_t>& code,
                const std::vector<std::uint8_t>& uncertain, int extent) {
  auto& coord = axis == Axis::x ? map.proj_x : map.proj_y;
  (axis == Axis::x ? map.has_x : map.has_y) = true;
  for (std::size_t i = 0; i < map.size(); ++i) {
    if (map.status[i] != PixelStatus::valid) continue;
    if (uncertain[i]) {
      map.status[i] = PixelStatus::uncertain_bit;
      continue;
    }
    const std::uint32_t value = gray_to_binary(code[i]);
    if (value >= static_cast<std::uint32_t>(extent)) {
      map.status[i] = PixelStatus::out_of_range;
      continue;
    }
    coord[i] = value + 0.5;
  }
}

}  // namespace

DirectGlobal separate_direct_global(const PatternStack& captured, int high_frequency_bits) {
  const auto axes = collect_axes(captured, true);
  std::vector<const GrayImage*> images;
  for (const auto& a : axes) {
    const int take = std::clamp(high_frequency_bits, 1, a.bits);
    for (int b = a.bits - take; b < a.bits; ++b) {
      images.push_back(a.pattern[static_cast<std::size_t>(b)]);
      images.push_back(a.inverse[static_cast<std::size_t>(b)]);
    }
  }
  return separate_direct_global(images);
}

CorrespondenceMap decode_gray(const PatternStack& captured, const GrayDecodeParams& params) {
  return decode_gray(captured, separate_direct_global(captured, params.high_frequency_bits),
                     params.min_direct);
}

CorrespondenceMap decode_gray(const PatternStack& captured, const DirectGlobal& sep,
                              double min_direct) {
  const auto axes = collect_axes(captured, true);
  const int w = sep.width;
  const int h = sep.height;
  check_dims(axes, w, h);
  const std::size_t n = static_cast<std::size_t>(w) * h;
  if (sep.direct.size() != n || sep.global.size() != n) {
    throw Error(ErrorCode::StackMismatch, "separation maps do not match the image size");
  }

  CorrespondenceMap map = CorrespondenceMap::make(
      w, h, captured.projector_width > 0 ? captured.projector_width : (1 << captured.bits_x),
      captured.projector_height > 0 ? captured.projector_height : (1 << captured.bits_y));
  // Direct estimates are integers, so d < m is equivalent to d < ceil(m).
  const double m_clamped = std::clamp(std::ceil(min_direct), -32768.0, 32767.0);
  const auto m = static_cast<std::int16_t>(m_clamped);
  for (std::size_t i = 0; i < n; ++i) {
    map.direct[i] = sep.direct[i];
    map.global[i] = sep.global[i];
    map.status[i] = sep.direct[i] < m ? PixelStatus::low_direct : PixelStatus::valid;
  }

  const auto& k = kernels::active();
  for (const auto& a : axes) {
    std::vector<std::uint32_t> code(n, 0);
    std::vector<std::uint8_t> uncertain(n, 0);
    parallel_for(n, [&](std::size_t b, std::size_t e) {
      std::vector<std::uint8_t> bits(e - b);
      for (int bit = 0; bit < a.bits; ++bit) {
        k.classify_bits(a.pattern[static_cast<std::size_t>(bit)]->pixels.data() + b,
                        a.inverse[static_cast<std::size_t>(bit)]->pixels.data() + b,
                        sep.direct.data() + b, sep.global.data() + b, m, bits.data(), e - b);
        for (std::size_t i = b; i < e; ++i) {
          const std::uint8_t v = bits[i - b];
          code[i] = (code[i] << 1) | (v == kernels::kBitOne ? 1u : 0u);
          uncertain[i] |= static_cast<std::uint8_t>(v == kernels::kBitUncertain);
        }
      }
    });
    store_axis(map, a.axis, code, uncertain, a.extent);
  }
  return map;
}

CorrespondenceMap decode_gray_naive(const PatternStack& captured, double min_contrast) {
  const auto axes = collect_axes(captured, false);
  const PatternFrame* white = captured.find(PatternKind::reference_white);
  const PatternFrame* black = captured.find(PatternKind::reference_black);
  if (white == nullptr || black == nullptr) {
    throw Error(ErrorCode::StackMismatch, "naive decoding needs white and black references");
  }
  const int w = white->image.width;
  const int h = white->image.height;
  check_dims(axes, w, h);
  const std::size_t n = static_cast<std::size_t>(w) * h;
  CorrespondenceMap map = CorrespondenceMap::make(w, h, captured.projector_width,
                                                  captured.projector_height);
  std::vector<double> threshold(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double hi = white->image.pixels[i];
    const double lo = black->image.pixels[i];
    threshold[i] = 0.5 * (hi + lo);
    map.direct[i] = static_cast<float>(hi - lo);
    map.status[i] = hi - lo < min_contrast ? PixelStatus::low_direct : PixelStatus::valid;
  }
  for (const auto& a : axes) {
    std::vector<std::uint32_t> code(n, 0);
    std::vector<std::uint8_t> uncertain(n, 0);
    for (const GrayImage* img : a.pattern) {
      for (std::size_t i = 0; i < n; ++i) {
        code[i] = (code[i] << 1) | (img->pixels[i] > threshold[i] ? 1u : 0u);
      }
    }
    store_axis(map, a.axis, code, uncertain, a.extent);
  }
  return map;
}

}  // namespace slscan::codec
