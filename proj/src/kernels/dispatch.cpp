#include "slscan/kernels.hpp"

#include "slscan/error.hpp"

#include <atomic>

namespace slscan::kernels {

#ifndef SLSCAN_HAVE_AVX2
const KernelTable* avx2_table() noexcept { return nullptr; }
#endif

namespace {

std::atomic<const KernelTable*> g_forced{nullptr};

const KernelTable* table_for(Isa isa) noexcept {
  switch (isa) {
    case Isa::scalar: return &scalar_table();
    case Isa::avx2: return avx2_table();
  }
  return nullptr;
}

}  // namespace

std::string_view to_string(Isa isa) noexcept {
  switch (isa) {
    case Isa::scalar: return "scalar";
    case Isa::avx2: return "avx2";
  }
  return "unknown";
}

bool cpu_supports(Isa isa) noexcept {
  switch (isa) {
    case Isa::scalar: return true;
    case Isa::avx2:
#if defined(SLSCAN_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
      return __builtin_cpu_supports("avx2");
#else
      return false;
#endif
  }
  return false;
}

Isa detected_isa() noexcept {
  if (avx2_table() != nullptr && cpu_supports(Isa::avx2)) return Isa::avx2;
  return Isa::scalar;
}

const KernelTable& active() noexcept {
  if (const KernelTable* forced = g_forced.load(std::memory_order_acquire)) return *forced;
  static const KernelTable* detected = table_for(detected_isa());
  return *detected;
}

void force_isa(Isa isa) {
  const KernelTable* table = table_for(isa);
  if (table == nullptr || !cpu_supports(isa)) {
    throw Error(ErrorCode::InvalidArgument,
                "ISA " + std::string(to_string(isa)) + " is not available on this build or CPU");
  }
  g_forced.store(table, std::memory_order_release);
}

void reset_isa() noexcept { g_forced.store(nullptr, std::memory_order_release); }

}  // namespace slscan::kernels
