#include "slscan/codec.hpp"

#include "slscan/error.hpp"

#include <algorithm>

namespace slscan::codec {

std::string_view to_string(PatternKind kind) noexcept {
  switch (kind) {
    case PatternKind::gray_x: return "gray-x";
    case PatternKind::gray_y: return "gray-y";
    case PatternKind::gray_x_inverse: return "gray-x-inverse";
    case PatternKind::gray_y_inverse: return "gray-y-inverse";
    case PatternKind::phase_x: return "phase-x";
    case PatternKind::phase_y: return "phase-y";
    case PatternKind::reference_white: return "reference-white";
    case PatternKind::reference_black: return "reference-black";
  }
  return "unknown";
}

PatternKind pattern_kind_from_string(std::string_view name) {
  for (PatternKind k : {PatternKind::gray_x, PatternKind::gray_y, PatternKind::gray_x_inverse,
                        PatternKind::gray_y_inverse, PatternKind::phase_x, PatternKind::phase_y,
                        PatternKind::reference_white, PatternKind::reference_black}) {
    if (to_string(k) == name) return k;
  }
  throw Error(ErrorCode::InvalidArgument, "unknown pattern kind '" + std::string(name) + "'");
}

std::string_view to_string(PixelStatus status) noexcept {
  switch (status) {
    case PixelStatus::valid: return "valid";
    case PixelStatus::uncertain_bit: return "uncertain-bit";
    case PixelStatus::low_modulation: return "low-modulation";
    case PixelStatus::low_direct: return "low-direct";
    case PixelStatus::out_of_range: return "out-of-range";
    case PixelStatus::undecoded: return "undecoded";
  }
  return "unknown";
}

const PatternFrame* PatternStack::find(PatternKind kind, int index) const {
  for (const auto& f : frames) {
    if (f.kind == kind && f.index == index) return &f;
  }
  return nullptr;
}

bool PatternStack::has(PatternKind kind) const {
  return std::any_of(frames.begin(), frames.end(), [&](const auto& f) { return f.kind == kind; });
}

void PatternStack::merge(const PatternStack& other) {
  for (const auto& f : other.frames) {
    if (find(f.kind, f.index) == nullptr) frames.push_back(f);
  }
  projector_width = std::max(projector_width, other.projector_width);
  projector_height = std::max(projector_height, other.projector_height);
  bits_x = std::max(bits_x, other.bits_x);
  bits_y = std::max(bits_y, other.bits_y);
  if (fringe_width == 0.0) fringe_width = other.fringe_width;
}

int bits_for_extent(int extent) {
  if (extent < 1) throw Error(ErrorCode::InvalidArgument, "extent must be positive");
  int bits = 1;
  while ((std::int64_t{1} << bits) < extent) ++bits;
  return bits;
}

std::uint32_t gray_code(std::uint32_t n) noexcept { return n ^ (n >> 1); }

std::uint32_t gray_to_binary(std::uint32_t g) noexcept {
  for (std::uint32_t shift = 1; shift < 32; shift <<= 1) g ^= g >> shift;
  return g;
}

std::string gray_encode(std::uint32_t index, int bits) {
  if (bits < 1 || bits > 31) throw Error(ErrorCode::InvalidArgument, "bits must be in [1, 31]");
  if (index >= (std::uint32_t{1} << bits)) {
    throw Error(ErrorCode::OutOfRange,
                std::to_string(index) + " does not fit in " + std::to_string(bits) + " bits");
  }
  const std::uint32_t g = gray_code(index);
  std::string out(static_cast<std::size_t>(bits), '0');
  for (int i = 0; i < bits; ++i) {
    if ((g >> (bits - 1 - i)) & 1u) out[static_cast<std::size_t>(i)] = '1';
  }
  return out;
}

std::uint32_t gray_decode(std::string_view code) {
  if (code.empty() || code.size() > 31) {
    throw Error(ErrorCode::MalformedCode, "gray code must have 1 to 31 characters");
  }
  std::uint32_t g = 0;
  for (char c : code) {
    if (c != '0' && c != '1') {
      throw Error(ErrorCode::MalformedCode, "gray code may only contain '0' and '1'");
    }
    g = (g << 1) | static_cast<std::uint32_t>(c == '1');
  }
  return gray_to_binary(g);
}

}  // namespace slscan::codec
