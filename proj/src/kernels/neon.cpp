// NEON (AArch64) kernels: float32x4 loads widened to float64x2 pairs.

#include <arm_neon.h>

#include "variants.hpp"

namespace cbir::kernels::detail {
namespace {

double dot(const float* a, const float* b, std::size_t d) {
  float64x2_t acc0 = vdupq_n_f64(0.0);
  float64x2_t acc1 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= d; i += 4) {
    const float32x4_t va = vld1q_f32(a + i);
    const float32x4_t vb = vld1q_f32(b + i);
    acc0 = vfmaq_f64(acc0, vcvt_f64_f32(vget_low_f32(va)),
                     vcvt_f64_f32(vget_low_f32(vb)));
    acc1 = vfmaq_f64(acc1, vcvt_high_f64_f32(va), vcvt_high_f64_f32(vb));
  }
  double acc = vaddvq_f64(vaddq_f64(acc0, acc1));
  for (; i < d; ++i) {
    acc += static_cast<double>(a[i]) * static_cast<double>(b[i]);
  }
  return acc;
}

double l2sqr(const float* a, const float* b, std::size_t d) {
  float64x2_t acc0 = vdupq_n_f64(0.0);
  float64x2_t acc1 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= d; i += 4) {
    const float32x4_t va = vld1q_f32(a + i);
    const float32x4_t vb = vld1q_f32(b + i);
    const float64x2_t t0 = vsubq_f64(vcvt_f64_f32(vget_low_f32(va)),
                                     vcvt_f64_f32(vget_low_f32(vb)));
    const float64x2_t t1 =
        vsubq_f64(vcvt_high_f64_f32(va), vcvt_high_f64_f32(vb));
    acc0 = vfmaq_f64(acc0, t0, t0);
    acc1 = vfmaq_f64(acc1, t1, t1);
  }
  double acc = vaddvq_f64(vaddq_f64(acc0, acc1));
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


constexpr KernelTable kTable{Isa::Neon, dot, l2sqr, dot_many, l2sqr_many};

}  // namespace

const KernelTable& neon_table() { return kTable; }

}  // namespace cbir::kernels::detail
