#include "kernels_internal.hpp"

namespace pt::simd::detail {
namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double lane[4] = {0.0, 0.0, 0.0, 0.0};
  for (std::size_t i = 0; i < n; ++i) {
    lane[i & 3] += a[i] * b[i];
  }
  return (lane[0] + lane[1]) + (lane[2] + lane[3]);
}

double squared_distance_scalar(const double* a, const double* b, std::size_t n) {
  double lane[4] = {0.0, 0.0, 0.0, 0.0};
  for (std::size_t i = 0; i < n; ++i) {
    const double d = a[i] - b[i];
    lane[i & 3] += d * d;
  }
  return (lane[0] + lane[1]) + (lane[2] + lane[3]);
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void scale_scalar(double alpha, double* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) x[i] *= alpha;
}

}  // namespace

const KernelTable kScalarKernels{Isa::Scalar, dot_scalar, squared_distance_scalar, axpy_scalar,
                                 scale_scalar};

}  // namespace pt::simd::detail
