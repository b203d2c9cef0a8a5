#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>

#include "cqr/simd.hpp"

namespace cqr::simd {
namespace {

bool cpu_has_avx2() {
#if defined(CQR_HAVE_AVX2_KERNELS) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const KernelTable* select_default() {
  // CQR_SIMD=scalar|avx2 overrides detection.
  if (const char* env = std::getenv("CQR_SIMD"); env != nullptr && *env != '\0') {
    return &kernels_for(parse_isa(env));
  }
  return cpu_has_avx2() ? &kernels_for(Isa::avx2) : &scalar_kernels();
}

std::atomic<const KernelTable*> g_active{nullptr};

}  // namespace

bool isa_supported(Isa isa) {
  switch (isa) {
    case Isa::scalar:
      return true;
    case Isa::avx2:
      return cpu_has_avx2();
  }
  return false;
}

const KernelTable& kernels_for(Isa isa) {
  if (!isa_supported(isa)) {
    throw std::runtime_error("SIMD variant not supported on this CPU: " +
                             std::string(isa_name(isa)));
  }
#if defined(CQR_HAVE_AVX2_KERNELS)
  if (isa == Isa::avx2) return avx2_kernels();
#endif
  return scalar_kernels();
}

const KernelTable& kernels() {
  const KernelTable* table = g_active.load(std::memory_order_acquire);
  if (table == nullptr) {
    const KernelTable* chosen = select_default();
    g_active.compare_exchange_strong(table, chosen, std::memory_order_acq_rel);
    table = g_active.load(std::memory_order_acquire);
  }
  return *table;
}

Isa active_isa() { return kernels().isa; }

void force_isa(Isa isa) { g_active.store(&kernels_for(isa), std::memory_order_release); }

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::scalar:
      return "scalar";
    case Isa::avx2:
      return "avx2";
  }
  return "unknown";
}

Isa parse_isa(std::string_view name) {
  if (name == "scalar") return Isa::scalar;
  if (name == "avx2") return Isa::avx2;
  throw std::invalid_argument("unknown SIMD variant: " + std::string(name));
}

}  // namespace cqr::simd
