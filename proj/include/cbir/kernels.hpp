#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace cbir::kernels {

enum class Isa { Scalar, Avx2, Avx512, Neon };

std::string_view isa_name(Isa isa) noexcept;

/// Function table for one instruction set. All reductions read 32-bit
/// inputs and accumulate in 64-bit.
struct KernelTable {
  Isa isa;
  // <a, b> over d elements
  double (*dot)(const float* a, const float* b, std::size_t d);
  // ||a - b||^2 over d elements
  double (*l2sqr)(const float* a, const float* b, std::size_t d);
  // out[i] = <q, rows[i]> for n contiguous rows of width d
  void (*dot_many)(const float* q, const float* rows, std::size_t n,
                   std::size_t d, double* out);
  // out[i] = ||q - rows[i]||^2
  void (*l2sqr_many)(const float* q, const float* rows, std::size_t n,
                     std::size_t d, double* out);
};

/// Variants compiled into this binary that the running CPU supports,
/// Scalar first.
std::vector<Isa> available_isas();

/// Table for a specific ISA; throws InvalidArgument if unavailable.
const KernelTable& table_for(Isa isa);

/// The table used by the engine: the widest available ISA unless overridden.
const KernelTable& active();

/// Force a particular variant (tests, benchmarks). Not thread-safe against
/// concurrent searches; call before work starts.
void set_active(Isa isa);
void reset_active();

// Convenience wrappers over active().
inline double dot(std::span<const float> a, std::span<const float> b) {
  return active().dot(a.data(), b.data(), a.size());
}
inline double l2sqr(std::span<const float> a, std::span<const float> b) {
  return active().l2sqr(a.data(), b.data(), a.size());
}

}  // namespace cbir::kernels
