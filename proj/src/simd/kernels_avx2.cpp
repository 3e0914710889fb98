#include <immintrin.h>

#include <cstdint>

#include "kernels_internal.hpp"

namespace pt::simd::detail {
namespace {

// Mask selecting the first `rem` (< 4) lanes for maskload.
inline __m256i tail_mask(std::size_t rem) {
  const __m256i idx = _mm256_setr_epi64x(0, 1, 2, 3);
  return _mm256_cmpgt_epi64(_mm256_set1_epi64x(static_cast<std::int64_t>(rem)), idx);
}

inline double reduce_lanes(__m256d acc) {
  alignas(32) double lane[4];
  _mm256_store_pd(lane, acc);
  return (lane[0] + lane[1]) + (lane[2] + lane[3]);
}

double dot_avx2(const double* a, const double* b, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc = _mm256_add_pd(acc, _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
  }
  if (i < n) {
    const __m256i m = tail_mask(n - i);
    acc = _mm256_add_pd(acc, _mm256_mul_pd(_mm256_maskload_pd(a + i, m),
                                           _mm256_maskload_pd(b + i, m)));
  }
  return reduce_lanes(acc);
}

double squared_distance_avx2(const double* a, const double* b, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
    acc = _mm256_add_pd(acc, _mm256_mul_pd(d, d));
  }
  if (i < n) {
    const __m256i m = tail_mask(n - i);
    const __m256d d = _mm256_sub_pd(_mm256_maskload_pd(a + i, m), _mm256_maskload_pd(b + i, m));
    acc = _mm256_add_pd(acc, _mm256_mul_pd(d, d));
  }
  return reduce_lanes(acc);
}

void axpy_avx2(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d r = _mm256_add_pd(_mm256_loadu_pd(y + i), _mm256_mul_pd(va, _mm256_loadu_pd(x + i)));
    _mm256_storeu_pd(y + i, r);
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void scale_avx2(double alpha, double* x, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(x + i, _mm256_mul_pd(va, _mm256_loadu_pd(x + i)));
  }
  for (; i < n; ++i) x[i] *= alpha;
}

}  // namespace

const KernelTable kAvx2Kernels{Isa::Avx2, dot_avx2, squared_distance_avx2, axpy_avx2, scale_avx2};

}  // namespace pt::simd::detail
