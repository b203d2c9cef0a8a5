#pragma once

// Dense inner loops over the topic dimension.
//
// Every kernel has a portable scalar reference implementation and, on x86-64,
// an AVX2 variant. The active table is chosen once at first use from the
// running CPU; `force_isa` pins it (CLI flag, equivalence tests).
//
// Elementwise kernels (`gibbs_weights`, `fold_in_weights`, `hadamard`) are
// bit-identical across variants. Reductions (`dot`, `dot3`) are not: the
// vector variant sums in four lanes and then folds them.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>

namespace cqr::simd {

enum class Isa { scalar, avx2 };

struct KernelTable {
  Isa isa;
  // sum_i a[i] * b[i]
  double (*dot)(const double* a, const double* b, std::size_t n);
  // sum_i a[i] * b[i] * c[i]
  double (*dot3)(const double* a, const double* b, const double* c, std::size_t n);
  // out[i] = a[i] * b[i]
  void (*hadamard)(const double* a, const double* b, double* out, std::size_t n);
  // Collapsed Gibbs full conditional (unnormalized):
  // out[k] = (doc[k] + alpha) * (word[k] + beta) / (total[k] + vbeta)
  void (*gibbs_weights)(const std::int32_t* doc, const std::int32_t* word,
                        const std::int32_t* total, double alpha, double beta,
                        double vbeta, double* out, std::size_t n);
  // Fold-in conditional with frozen topic-word probabilities:
  // out[k] = (doc[k] + alpha) * phi[k]
  void (*fold_in_weights)(const std::int32_t* doc, const double* phi, double alpha,
                          double* out, std::size_t n);
};

const KernelTable& scalar_kernels();
#if defined(CQR_HAVE_AVX2_KERNELS)
const KernelTable& avx2_kernels();
#endif

bool isa_supported(Isa isa);
const KernelTable& kernels_for(Isa isa);  // throws if unsupported here

// Active table; selected lazily.
const KernelTable& kernels();
Isa active_isa();
void force_isa(Isa isa);

std::string_view isa_name(Isa isa);
Isa parse_isa(std::string_view name);  // "scalar" | "avx2"

inline double dot(std::span<const double> a, std::span<const double> b) {
  return kernels().dot(a.data(), b.data(), a.size());
}

}  // namespace cqr::simd
