#include "cqr/simd.hpp"

namespace cqr::simd {
namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

double dot3_scalar(const double* a, const double* b, const double* c, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i] * c[i];
  return acc;
}

void hadamard_scalar(const double* a, const double* b, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] * b[i];
}

void gibbs_weights_scalar(const std::int32_t* doc, const std::int32_t* word,
                          const std::int32_t* total, double alpha, double beta,
                          double vbeta, double* out, std::size_t n) {
  for (std::size_t k = 0; k < n; ++k) {
    out[k] = (static_cast<double>(doc[k]) + alpha) * (static_cast<double>(word[k]) + beta) /
             (static_cast<double>(total[k]) + vbeta);
  }
}

void fold_in_weights_scalar(const std::int32_t* doc, const double* phi, double alpha,
                            double* out, std::size_t n) {
  for (std::size_t k = 0; k < n; ++k) out[k] = (static_cast<double>(doc[k]) + alpha) * phi[k];
}

}  // namespace

const KernelTable& scalar_kernels() {
  static const KernelTable table{Isa::scalar,          dot_scalar,
                                 dot3_scalar,          hadamard_scalar,
                                 gibbs_weights_scalar, fold_in_weights_scalar};
  return table;
}

}  // namespace cqr::simd
