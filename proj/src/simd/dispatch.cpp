#include <atomic>
#include <cstdlib>
#include <string_view>

#include "kernels_internal.hpp"

namespace pt::simd {

std::string_view to_string(Isa isa) {
  switch (isa) {
    case Isa::Scalar: return "scalar";
    case Isa::Avx2: return "avx2";
    case Isa::Neon: return "neon";
  }
  return "scalar";
}

const KernelTable& scalar_table() { return detail::kScalarKernels; }

const KernelTable* table_for(Isa isa) {
  switch (isa) {
    case Isa::Scalar:
      return &detail::kScalarKernels;
    case Isa::Avx2:
#if defined(__x86_64__) || defined(_M_X64)
      if (__builtin_cpu_supports("avx2")) return &detail::kAvx2Kernels;
#endif
      return nullptr;
    case Isa::Neon:
#if defined(__aarch64__)
      return &detail::kNeonKernels;
#else
      return nullptr;
#endif
  }
  return nullptr;
}

namespace {

const KernelTable* detect() {
  if (const char* forced = std::getenv("PARTTRANSFER_SIMD")) {
    if (std::string_view(forced) == "scalar") return &detail::kScalarKernels;
  }
  for (Isa isa : {Isa::Avx2, Isa::Neon}) {
    if (const KernelTable* t = table_for(isa)) return t;
  }
  return &detail::kScalarKernels;
}

std::atomic<const KernelTable*>& current() {
  static std::atomic<const KernelTable*> table{detect()};
  return table;
}

}  // namespace

const KernelTable& active() { return *current().load(std::memory_order_relaxed); }

bool select(Isa isa) {
  const KernelTable* t = table_for(isa);
  if (t == nullptr) return false;
  current().store(t, std::memory_order_relaxed);
  return true;
}

}  // namespace pt::simd
