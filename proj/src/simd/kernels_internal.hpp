#pragma once

#include "parttransfer/simd.hpp"

namespace pt::simd::detail {

extern const KernelTable kScalarKernels;
#if defined(__x86_64__) || defined(_M_X64)
extern const KernelTable kAvx2Kernels;
#endif
#if defined(__aarch64__)
extern const KernelTable kNeonKernels;
#endif

}  // namespace pt::simd::detail
