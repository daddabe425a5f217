// Reference kernels. Every SIMD variant is tested for equivalence against
// these.

#include "variants.hpp"

namespace cbir::kernels::detail {
namespace {

double dot(const float* a, const float* b, std::size_t d) {
  double acc = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    acc += static_cast<double>(a[i]) * static_cast<double>(b[i]);
  }
  return acc;
}

double l2sqr(const float* a, const float* b, std::size_t d) {
  double acc = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    const double t = static_cast<double>(a[i]) - static_cast<double>(b[i]);
    acc += t * t;
  }
  return acc;
}

void dot_many(const float* q, const float* rows, std::size_t n, std::size_t d,
              double* out) {
  for (std::size_t i = 0; i < n; ++i) out[i] = dot(q, rows + i * d, d);
}

void l2sqr_many(const float* q, const float* rows, std::size_t n,
                std::size_t d, double* out) {
  for (std::size_t i = 0; i < n; ++i) out[i] = l2sqr(q, rows + i * d, d);
}


constexpr KernelTable kTable{Isa::Scalar, dot, l2sqr, dot_many, l2sqr_many};

}  // namespace

const KernelTable& scalar_table() { return kTable; }

}  // namespace cbir::kernels::detail
