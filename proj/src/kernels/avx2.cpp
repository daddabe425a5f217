// AVX2 + FMA kernels. Inputs are widened to double four lanes at a time so
// accumulation matches the 64-bit contract of the scalar reference.

#include <immintrin.h>

#include "variants.hpp"

namespace cbir::kernels::detail {
namespace {

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  __m128d s = _mm_add_pd(lo, hi);
  s = _mm_add_sd(s, _mm_unpackhi_pd(s, s));
  return _mm_cvtsd_f64(s);
}

double dot(const float* a, const float* b, std::size_t d) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= d; i += 8) {
    const __m256 va = _mm256_loadu_ps(a + i);
    const __m256 vb = _mm256_loadu_ps(b + i);
    const __m256d a0 = _mm256_cvtps_pd(_mm256_castps256_ps128(va));
    const __m256d a1 = _mm256_cvtps_pd(_mm256_extractf128_ps(va, 1));
    const __m256d b0 = _mm256_cvtps_pd(_mm256_castps256_ps128(vb));
    const __m256d b1 = _mm256_cvtps_pd(_mm256_extractf128_ps(vb, 1));
    acc0 = _mm256_fmadd_pd(a0, b0, acc0);
    acc1 = _mm256_fmadd_pd(a1, b1, acc1);
  }
  for (; i + 4 <= d; i += 4) {
    const __m256d a0 = _mm256_cvtps_pd(_mm_loadu_ps(a + i));
    const __m256d b0 = _mm256_cvtps_pd(_mm_loadu_ps(b + i));
    acc0 = _mm256_fmadd_pd(a0, b0, acc0);
  }
  double acc = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < d; ++i) {
    acc += static_cast<double>(a[i]) * static_cast<double>(b[i]);
  }
  return acc;
}

double l2sqr(const float* a, const float* b, std::size_t d) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= d; i += 8) {
    const __m256 va = _mm256_loadu_ps(a + i);
    const __m256 vb = _mm256_loadu_ps(b + i);
    const __m256d t0 =
        _mm256_sub_pd(_mm256_cvtps_pd(_mm256_castps256_ps128(va)),
                      _mm256_cvtps_pd(_mm256_castps256_ps128(vb)));
    const __m256d t1 =
        _mm256_sub_pd(_mm256_cvtps_pd(_mm256_extractf128_ps(va, 1)),
                      _mm256_cvtps_pd(_mm256_extractf128_ps(vb, 1)));
    acc0 = _mm256_fmadd_pd(t0, t0, acc0);
    acc1 = _mm256_fmadd_pd(t1, t1, acc1);
  }
  for (; i + 4 <= d; i += 4) {
    const __m256d t0 = _mm256_sub_pd(_mm256_cvtps_pd(_mm_loadu_ps(a + i)),
                                     _mm256_cvtps_pd(_mm_loadu_ps(b + i)));
    acc0 = _mm256_fmadd_pd(t0, t0, acc0);
  }
  double acc = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < d; ++i) {
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


constexpr KernelTable kTable{Isa::Avx2, dot, l2sqr, dot_many, l2sqr_many};

}  // namespace

const KernelTable& avx2_table() { return kTable; }

}  // namespace cbir::kernels::detail
