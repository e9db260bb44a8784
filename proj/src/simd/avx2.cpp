// Compiled with -mavx2 (see src/CMakeLists.txt); only reached through the
// dispatcher after a runtime CPU check.
#include "adot/simd.hpp"

#ifdef ADOT_SIMD_HAVE_AVX2_BUILD

#include <immintrin.h>

#include <cmath>

namespace adot::simd::avx2 {

void axpy(double alpha, std::span<const double> x, std::span<double> y) noexcept {
  const std::size_t n = x.size() < y.size() ? x.size() : y.size();
  const double* xp = x.data();
  double* yp = y.data();
  const __m256d a = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    __m256d y0 = _mm256_loadu_pd(yp + i);
    __m256d y1 = _mm256_loadu_pd(yp + i + 4);
    const __m256d p0 = _mm256_mul_pd(a, _mm256_loadu_pd(xp + i));
    const __m256d p1 = _mm256_mul_pd(a, _mm256_loadu_pd(xp + i + 4));
    y0 = _mm256_add_pd(y0, p0);
    y1 = _mm256_add_pd(y1, p1);
    _mm256_storeu_pd(yp + i, y0);
    _mm256_storeu_pd(yp + i + 4, y1);
  }
  for (; i + 4 <= n; i += 4) {
    const __m256d p = _mm256_mul_pd(a, _mm256_loadu_pd(xp + i));
    _mm256_storeu_pd(yp + i, _mm256_add_pd(_mm256_loadu_pd(yp + i), p));
  }
  for (; i < n; ++i) {
    const double prod = alpha * xp[i];
    yp[i] = yp[i] + prod;
  }
}

void scale(double alpha, std::span<double> x) noexcept {
  const std::size_t n = x.size();
  double* xp = x.data();
  const __m256d a = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(xp + i, _mm256_mul_pd(_mm256_loadu_pd(xp + i), a));
  }
  for (; i < n; ++i) xp[i] = xp[i] * alpha;
}

double max_abs(std::span<const double> x) noexcept {
  const std::size_t n = x.size();
  const double* xp = x.data();
  // clear the sign bit
  const __m256d mask = _mm256_castsi256_pd(_mm256_set1_epi64x(0x7fffffffffffffffLL));
  __m256d m = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    m = _mm256_max_pd(m, _mm256_and_pd(_mm256_loadu_pd(xp + i), mask));
  }
  alignas(32) double lanes[4];
  _mm256_store_pd(lanes, m);
  double r = lanes[0];
  for (int k = 1; k < 4; ++k) r = lanes[k] > r ? lanes[k] : r;
  for (; i < n; ++i) {
    const double a = std::fabs(xp[i]);
    if (a > r) r = a;
  }
  return r;
}

}  // namespace adot::simd::avx2

#endif
