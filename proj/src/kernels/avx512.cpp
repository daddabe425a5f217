// AVX-512F kernels: 16 floats per load, widened to two 8-lane double
// accumulators. Tails use masked loads.

#include <immintrin.h>

#include "variants.hpp"

namespace cbir::kernels::detail {
namespace {

inline __m512d widen_lo(__m512 v) {
  return _mm512_cvtps_pd(_mm512_castps512_ps256(v));
}
inline __m512d widen_hi(__m512 v) {
  return _mm512_cvtps_pd(_mm256_castpd_ps(_mm512_extractf64x4_pd(
      _mm512_castps_pd(v), 1)));
}

double dot(const float* a, const float* b, std::size_t d) {
  __m512d acc0 = _mm512_setzero_pd();
  __m512d acc1 = _mm512_setzero_pd();
  std::size_t i = 0;
  for (; i + 16 <= d; i += 16) {
    const __m512 va = _mm512_loadu_ps(a + i);
    const __m512 vb = _mm512_loadu_ps(b + i);
    acc0 = _mm512_fmadd_pd(widen_lo(va), widen_lo(vb), acc0);
    acc1 = _mm512_fmadd_pd(widen_hi(va), widen_hi(vb), acc1);
  }
  if (i < d) {
    const __mmask16 m = static_cast<__mmask16>((1u << (d - i)) - 1u);
    const __m512 va = _mm512_maskz_loadu_ps(m, a + i);
    const __m512 vb = _mm512_maskz_loadu_ps(m, b + i);
    acc0 = _mm512_fmadd_pd(widen_lo(va), widen_lo(vb), acc0);
    acc1 = _mm512_fmadd_pd(widen_hi(va), widen_hi(vb), acc1);
  }
  return _mm512_reduce_add_pd(_mm512_add_pd(acc0, acc1));
}

double l2sqr(const float* a, const float* b, std::size_t d) {
  __m512d acc0 = _mm512_setzero_pd();
  __m512d acc1 = _mm512_setzero_pd();
  std::size_t i = 0;
  for (; i + 16 <= d; i += 16) {
    const __m512 va = _mm512_loadu_ps(a + i);
    const __m512 vb = _mm512_loadu_ps(b + i);
    const __m512d t0 = _mm512_sub_pd(widen_lo(va), widen_lo(vb));
    const __m512d t1 = _mm512_sub_pd(widen_hi(va), widen_hi(vb));
    acc0 = _mm512_fmadd_pd(t0, t0, acc0);
    acc1 = _mm512_fmadd_pd(t1, t1, acc1);
  }
  if (i < d) {
    const __mmask16 m = static_cast<__mmask16>((1u << (d - i)) - 1u);
    const __m512 va = _mm512_maskz_loadu_ps(m, a + i);
    const __m512 vb = _mm512_maskz_loadu_ps(m, b + i);
    const __m512d t0 = _mm512_sub_pd(widen_lo(va), widen_lo(vb));
    const __m512d t1 = _mm512_sub_pd(widen_hi(va), widen_hi(vb));
    acc0 = _mm512_fmadd_pd(t0, t0, acc0);
    acc1 = _mm512_fmadd_pd(t1, t1, acc1);
  }
  return _mm512_reduce_add_pd(_mm512_add_pd(acc0, acc1));
}

void dot_many(const float* q, const float* rows, std::size_t n, std::size_t d,
              double* out) {
  for (std::size_t i = 0; i < n; ++i) out[i] = dot(q, rows + i * d, d);
}

void l2sqr_many(const float* q, const float* rows, std::size_t n,
                std::size_t d, double* out) {
  for (std::size_t i = 0; i < n; ++i) out[i] = l2sqr(q, rows + i * d, d);
}


constexpr KernelTable kTable{Isa::Avx512, dot, l2sqr, dot_many, l2sqr_many};

}  // namespace

const KernelTable& avx512_table() { return kTable; }

}  // namespace cbir::kernels::detail
