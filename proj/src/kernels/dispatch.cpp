#include <atomic>
#include <string>

#include "cbir/error.hpp"
#include "variants.hpp"

namespace cbir::kernels {
namespace {

bool cpu_supports(Isa isa) {
  switch (isa) {
    case Isa::Scalar:
      return true;
#if defined(CBIR_HAVE_X86_KERNELS)
    case Isa::Avx2:
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
    case Isa::Avx512:
      return __builtin_cpu_supports("avx512f") &&
             __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#endif
#if defined(CBIR_HAVE_NEON_KERNELS)
    case Isa::Neon:
      return true;  // mandatory on AArch64
#endif
    default:
      return false;
  }
}

const KernelTable* lookup(Isa isa) {
  if (!cpu_supports(isa)) return nullptr;
  switch (isa) {
    case Isa::Scalar:
      return &detail::scalar_table();
#if defined(CBIR_HAVE_X86_KERNELS)
    case Isa::Avx2:
      return &detail::avx2_table();
    case Isa::Avx512:
      return &detail::avx512_table();
#endif
#if defined(CBIR_HAVE_NEON_KERNELS)
    case Isa::Neon:
      return &detail::neon_table();
#endif
    default:
      return nullptr;
  }
}

const KernelTable* widest() {
  for (Isa isa : {Isa::Avx512, Isa::Avx2, Isa::Neon}) {
    if (const KernelTable* t = lookup(isa)) return t;
  }
  return &detail::scalar_table();
}

std::atomic<const KernelTable*>& current() {
  static std::atomic<const KernelTable*> table{widest()};
  return table;
}

}  // namespace

std::string_view isa_name(Isa isa) noexcept {
  switch (isa) {
    case Isa::Scalar: return "scalar";
    case Isa::Avx2: return "avx2";
    case Isa::Avx512: return "avx512";
    case Isa::Neon: return "neon";
  }
  return "unknown";
}

std::vector<Isa> available_isas() {
  std::vector<Isa> out;
  for (Isa isa : {Isa::Scalar, Isa::Avx2, Isa::Avx512, Isa::Neon}) {
    if (lookup(isa) != nullptr) out.push_back(isa);
  }
  return out;
}

const KernelTable& table_for(Isa isa) {
  const KernelTable* t = lookup(isa);
  if (t == nullptr) {
    fail(Errc::InvalidArgument,
         "kernel variant not available: " + std::string(isa_name(isa)));
  }
  return *t;
}

const KernelTable& active() {
  return *current().load(std::memory_order_acquire);
}

void set_active(Isa isa) {
  current().store(&table_for(isa), std::memory_order_release);
}

void reset_active() {
  current().store(widest(), std::memory_order_release);
}

}  // namespace cbir::kernels
