#include <immintrin.h>

#include "cqr/simd.hpp"

namespace cqr::simd {
namespace {

inline double horizontal_sum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d swapped = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, swapped));
}

inline __m256d load_i32_as_pd(const std::int32_t* p) {
  return _mm256_cvtepi32_pd(_mm_loadu_si128(reinterpret_cast<const __m128i*>(p)));
}

double dot_avx2(const double* a, const double* b, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc);
  }
  double sum = horizontal_sum(acc);
  for (; i < n; ++i) sum += a[i] * b[i];
  return sum;
}

double dot3_avx2(const double* a, const double* b, const double* c, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d ab = _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
    acc = _mm256_fmadd_pd(ab, _mm256_loadu_pd(c + i), acc);
  }
  double sum = horizontal_sum(acc);
  for (; i < n; ++i) sum += a[i] * b[i] * c[i];
  return sum;
}

void hadamard_avx2(const double* a, const double* b, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(out + i, _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
  }
  for (; i < n; ++i) out[i] = a[i] * b[i];
}

void gibbs_weights_avx2(const std::int32_t* doc, const std::int32_t* word,
                        const std::int32_t* total, double alpha, double beta, double vbeta,
                        double* out, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  const __m256d vb = _mm256_set1_pd(beta);
  const __m256d vvb = _mm256_set1_pd(vbeta);
  std::size_t k = 0;
  for (; k + 4 <= n; k += 4) {
    __m256d d = _mm256_add_pd(load_i32_as_pd(doc + k), va);
    __m256d w = _mm256_add_pd(load_i32_as_pd(word + k), vb);
    __m256d t = _mm256_add_pd(load_i32_as_pd(total + k), vvb);
    _mm256_storeu_pd(out + k, _mm256_div_pd(_mm256_mul_pd(d, w), t));
  }
  for (; k < n; ++k) {
    out[k] = (static_cast<double>(doc[k]) + alpha) * (static_cast<double>(word[k]) + beta) /
             (static_cast<double>(total[k]) + vbeta);
  }
}

void fold_in_weights_avx2(const std::int32_t* doc, const double* phi, double alpha, double* out,
                          std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t k = 0;
  for (; k + 4 <= n; k += 4) {
    __m256d d = _mm256_add_pd(load_i32_as_pd(doc + k), va);
    _mm256_storeu_pd(out + k, _mm256_mul_pd(d, _mm256_loadu_pd(phi + k)));
  }
  for (; k < n; ++k) out[k] = (static_cast<double>(doc[k]) + alpha) * phi[k];
}

}  // namespace

const KernelTable& avx2_kernels() {
  static const KernelTable table{Isa::avx2,          dot_avx2,
                                 dot3_avx2,          hadamard_avx2,
                                 gibbs_weights_avx2, fold_in_weights_avx2};
  return table;
}

}  // namespace cqr::simd
