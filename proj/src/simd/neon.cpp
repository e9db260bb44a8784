#include "adot/simd.hpp"

#ifdef ADOT_SIMD_HAVE_NEON_BUILD

#include <arm_neon.h>

#include <cmath>

namespace adot::simd::neon {

void axpy(double alpha, std::span<const double> x, std::span<double> y) noexcept {
  const std::size_t n = x.size() < y.size() ? x.size() : y.size();
  const double* xp = x.data();
  double* yp = y.data();
  const float64x2_t a = vdupq_n_f64(alpha);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    // vmulq + vaddq rather than vfmaq: must round like the scalar path
    const float64x2_t p = vmulq_f64(a, vld1q_f64(xp + i));
    vst1q_f64(yp + i, vaddq_f64(vld1q_f64(yp + i), p));
  }
  for (; i < n; ++i) {
    const double prod = alpha * xp[i];
    yp[i] = yp[i] + prod;
  }
}

void scale(double alpha, std::span<double> x) noexcept {
  const std::size_t n = x.size();
  double* xp = x.data();
  const float64x2_t a = vdupq_n_f64(alpha);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) vst1q_f64(xp + i, vmulq_f64(vld1q_f64(xp + i), a));
  for (; i < n; ++i) xp[i] = xp[i] * alpha;
}

double max_abs(std::span<const double> x) noexcept {
  const std::size_t n = x.size();
  const double* xp = x.data();
  float64x2_t m = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) m = vmaxq_f64(m, vabsq_f64(vld1q_f64(xp + i)));
  double r = vmaxvq_f64(m);
  for (; i < n; ++i) {
    const double a = std::fabs(xp[i]);
    if (a > r) r = a;
  }
  return r;
}

}  // namespace adot::simd::neon

#endif
