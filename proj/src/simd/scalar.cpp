#include <cmath>

#include "adot/simd.hpp"

namespace adot::simd::scalar {

void axpy(double alpha, std::span<const double> x, std::span<double> y) noexcept {
  const std::size_t n = x.size() < y.size() ? x.size() : y.size();
  for (std::size_t i = 0; i < n; ++i) {
    const double prod = alpha * x[i];
    y[i] = y[i] + prod;
  }
}

void scale(double alpha, std::span<double> x) noexcept {
  for (double& v : x) v = v * alpha;
}

double max_abs(std::span<const double> x) noexcept {
  double m = 0.0;
  for (double v : x) {
    const double a = std::fabs(v);
    if (a > m) m = a;
  }
  return m;
}

}  // namespace adot::simd::scalar
