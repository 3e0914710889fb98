#pragma once

#include <cstddef>
#include <span>
#include <string_view>

// Dense double-precision kernels behind the retrieval scan, the ridge Gram
// assembly and SVM training.
//
// Every variant accumulates in four interleaved lanes (element i goes to lane
// i % 4) and reduces as (l0 + l1) + (l2 + l3). Multiplies and adds are never
// fused. The scalar reference and the vector variants therefore return
// bit-identical results, which the equivalence tests check exactly.

namespace pt::simd {

enum class Isa { Scalar, Avx2, Neon };

std::string_view to_string(Isa isa);

struct KernelTable {
  Isa isa;
  double (*dot)(const double* a, const double* b, std::size_t n);
  double (*squared_distance)(const double* a, const double* b, std::size_t n);
  // y += alpha * x
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  // x *= alpha
  void (*scale)(double alpha, double* x, std::size_t n);
};

/// Variant in use. Chosen on first use from CPU support; the environment
/// variable PARTTRANSFER_SIMD=scalar forces the reference path.
const KernelTable& active();

/// Table for a specific ISA, or nullptr when it is not compiled in or the CPU
/// lacks it.
const KernelTable* table_for(Isa isa);

/// Overrides the active variant. Returns false when `isa` is unavailable.
bool select(Isa isa);

const KernelTable& scalar_table();

inline double dot(std::span<const double> a, std::span<const double> b) {
  return active().dot(a.data(), b.data(), a.size());
}

inline double squared_distance(std::span<const double> a, std::span<const double> b) {
  return active().squared_distance(a.data(), b.data(), a.size());
}

inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  active().axpy(alpha, x.data(), y.data(), x.size());
}

inline void scale(double alpha, std::span<double> x) {
  active().scale(alpha, x.data(), x.size());
}

}  // namespace pt::simd
