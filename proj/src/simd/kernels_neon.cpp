#include <arm_neon.h>

#include "kernels_internal.hpp"

namespace pt::simd::detail {
namespace {

// Two float64x2 registers hold lanes {0,1} and {2,3} of the canonical
// four-lane accumulator.

double dot_neon(const double* a, const double* b, std::size_t n) {
  float64x2_t lo = vdupq_n_f64(0.0);
  float64x2_t hi = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    lo = vaddq_f64(lo, vmulq_f64(vld1q_f64(a + i), vld1q_f64(b + i)));
    hi = vaddq_f64(hi, vmulq_f64(vld1q_f64(a + i + 2), vld1q_f64(b + i + 2)));
  }
  double lane[4] = {vgetq_lane_f64(lo, 0), vgetq_lane_f64(lo, 1), vgetq_lane_f64(hi, 0),
                    vgetq_lane_f64(hi, 1)};
  for (std::size_t k = 0; i < n; ++i, ++k) lane[k] += a[i] * b[i];
  return (lane[0] + lane[1]) + (lane[2] + lane[3]);
}

double squared_distance_neon(const double* a, const double* b, std::size_t n) {
  float64x2_t lo = vdupq_n_f64(0.0);
  float64x2_t hi = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const float64x2_t d0 = vsubq_f64(vld1q_f64(a + i), vld1q_f64(b + i));
    const float64x2_t d1 = vsubq_f64(vld1q_f64(a + i + 2), vld1q_f64(b + i + 2));
    lo = vaddq_f64(lo, vmulq_f64(d0, d0));
    hi = vaddq_f64(hi, vmulq_f64(d1, d1));
  }
  double lane[4] = {vgetq_lane_f64(lo, 0), vgetq_lane_f64(lo, 1), vgetq_lane_f64(hi, 0),
                    vgetq_lane_f64(hi, 1)};
  for (std::size_t k = 0; i < n; ++i, ++k) {
    const double d = a[i] - b[i];
    lane[k] += d * d;
  }
  return (lane[0] + lane[1]) + (lane[2] + lane[3]);
}

void axpy_neon(double alpha, const double* x, double* y, std::size_t n) {
  const float64x2_t va = vdupq_n_f64(alpha);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    vst1q_f64(y + i, vaddq_f64(vld1q_f64(y + i), vmulq_f64(va, vld1q_f64(x + i))));
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void scale_neon(double alpha, double* x, std::size_t n) {
  const float64x2_t va = vdupq_n_f64(alpha);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) vst1q_f64(x + i, vmulq_f64(va, vld1q_f64(x + i)));
  for (; i < n; ++i) x[i] *= alpha;
}

}  // namespace

const KernelTable kNeonKernels{Isa::Neon, dot_neon, squared_distance_neon, axpy_neon, scale_neon};

}  // namespace pt::simd::detail
