#pragma once

#include "xpf/simd/kernels.hpp"

namespace xpf::simd::detail {

extern const KernelTable scalar_table;
#if defined(XPF_HAVE_AVX2_TU)
extern const KernelTable avx2_table;
#endif

} // namespace xpf::simd::detail
