#pragma once

// Data-parallel inner loops used by decoding and registration. Each kernel has
// a scalar reference implementation and, on x86-64, an AVX2 variant selected
// at runtime. Both variants produce bit-identical output.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>

namespace slscan::kernels {

enum class Isa { scalar, avx2 };

std::string_view to_string(Isa isa) noexcept;

// Bit classification outcome, matching codec::BitValue numerically.
inline constexpr std::uint8_t kBitZero = 0;
inline constexpr std::uint8_t kBitOne = 1;
inline constexpr std::uint8_t kBitUncertain = 2;

struct KernelTable {
  Isa isa;

  // Per-pixel minimum and maximum across `planes` (each n pixels long).
  void (*stack_min_max)(std::span<const std::uint8_t* const> planes, std::size_t n,
                        std::uint8_t* lo, std::uint8_t* hi);

  // Robust bit classification of a pattern / inverse pair against per-pixel
  // direct and global estimates; min_direct is the integer threshold m.
  void (*classify_bits)(const std::uint8_t* p, const std::uint8_t* q, const std::int16_t* direct,
                        const std::int16_t* global, std::int16_t min_direct, std::uint8_t* out,
                        std::size_t n);

  // Three-step phase shifting: num = sqrt(3) * (i1 - i3), den = 2 * i2 - i1 - i3.
  void (*phase_terms)(const double* i1, const double* i2, const double* i3, double* num,
                      double* den, std::size_t n);

  // out[k] = (xs[k]-qx)^2 + (ys[k]-qy)^2 + (zs[k]-qz)^2, summed in that order.
  void (*squared_distances)(const double* xs, const double* ys, const double* zs, std::size_t n,
                            double qx, double qy, double qz, double* out);
};

const KernelTable& scalar_table() noexcept;
// Null when the build has no AVX2 variant.
const KernelTable* avx2_table() noexcept;

bool cpu_supports(Isa isa) noexcept;

// Best ISA supported by both the build and the running CPU.
Isa detected_isa() noexcept;

// The table used by the library. Defaults to detected_isa().
const KernelTable& active() noexcept;

// Pins the active ISA; throws InvalidArgument if the CPU or build lacks it.
void force_isa(Isa isa);
void reset_isa() noexcept;

}  // namespace slscan::kernels
