#pragma once

#include "cbir/kernels.hpp"

namespace cbir::kernels::detail {

const KernelTable& scalar_table();
#if defined(CBIR_HAVE_X86_KERNELS)
const KernelTable& avx2_table();
const KernelTable& avx512_table();
#endif
#if defined(CBIR_HAVE_NEON_KERNELS)
const KernelTable& neon_table();
#endif

}  // namespace cbir::kernels::detail
