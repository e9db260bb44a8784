#include <cstring>
#include <random>
#include <stdexcept>
#include <vector>

#include <doctest.h>

#include "adot/lp.hpp"
#include "adot/simd.hpp"

using namespace adot;

namespace {

std::vector<double> random_vector(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> u(-1e3, 1e3);
  std::vector<double> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

bool same_bits(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

struct Kernels {
  void (*axpy)(double, std::span<const double>, std::span<double>) noexcept;
  void (*scale)(double, std::span<double>) noexcept;
  double (*max_abs)(std::span<const double>) noexcept;
};

std::vector<std::pair<const char*, Kernels>> vector_backends() {
  std::vector<std::pair<const char*, Kernels>> out;
#ifdef ADOT_SIMD_HAVE_AVX2_BUILD
  if (simd::backend_available(simd::Backend::avx2))
    out.push_back({"avx2", {simd::avx2::axpy, simd::avx2::scale, simd::avx2::max_abs}});
#endif
#ifdef ADOT_SIMD_HAVE_NEON_BUILD
  if (simd::backend_available(simd::Backend::neon))
    out.push_back({"neon", {simd::neon::axpy, simd::neon::scale, simd::neon::max_abs}});
#endif
  return out;
}

}  // namespace

TEST_CASE("scalar backend is always available and selectable") {
  CHECK(simd::backend_available(simd::Backend::scalar));
  const simd::Backend before = simd::active_backend();
  simd::set_backend(simd::Backend::scalar);
  CHECK(simd::active_backend() == simd::Backend::scalar);
  simd::set_backend(before);
  CHECK(simd::backend_name(simd::Backend::avx2) == "avx2");
}

TEST_CASE("unavailable backend is rejected") {
  for (auto b : {simd::Backend::avx2, simd::Backend::neon}) {
    if (!simd::backend_available(b)) CHECK_THROWS_AS(simd::set_backend(b), std::invalid_argument);
  }
}

TEST_CASE("vector kernels match the scalar reference bit for bit") {
  std::mt19937_64 rng(11);
  for (const auto& [name, k] : vector_backends()) {
    CAPTURE(name);
    for (std::size_t n = 0; n < 70; ++n) {
      const auto x = random_vector(rng, n);
      const auto y0 = random_vector(rng, n);
      const double alpha = std::uniform_real_distribution<double>(-3, 3)(rng);

      auto ys = y0, yv = y0;
      simd::scalar::axpy(alpha, x, ys);
      k.axpy(alpha, x, yv);
      CHECK(same_bits(ys, yv));

      auto xs = x, xv = x;
      simd::scalar::scale(alpha, xs);
      k.scale(alpha, xv);
      CHECK(same_bits(xs, xv));

      const double ms = simd::scalar::max_abs(x), mv = k.max_abs(x);
      CHECK(std::memcmp(&ms, &mv, sizeof ms) == 0);
    }
  }
}

TEST_CASE("unaligned subspans agree") {
  std::mt19937_64 rng(12);
  for (const auto& [name, k] : vector_backends()) {
    CAPTURE(name);
    const auto x = random_vector(rng, 41);
    const auto y = random_vector(rng, 41);
    for (std::size_t off = 0; off < 5; ++off) {
      auto ys = y, yv = y;
      simd::scalar::axpy(0.75, std::span<const double>(x).subspan(off), std::span<double>(ys).subspan(off));
      k.axpy(0.75, std::span<const double>(x).subspan(off), std::span<double>(yv).subspan(off));
      CHECK(same_bits(ys, yv));
    }
  }
}

TEST_CASE("simplex output does not depend on the backend") {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int rep = 0; rep < 10; ++rep) {
    const std::size_t m = 6, n = 10;
    LinearProgram lp(m, n);
    std::vector<double> x0(n);
    for (auto& v : x0) v = u(rng);
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < n; ++j) lp.at(i, j) = u(rng) - 0.3;
      for (std::size_t j = 0; j < n; ++j) lp.b[i] += lp.at(i, j) * x0[j];
    }
    for (auto& c : lp.c) c = u(rng);

    const simd::Backend before = simd::active_backend();
    simd::set_backend(simd::Backend::scalar);
    const LPSolution ref = solve_lp(lp);
    for (auto b : {simd::Backend::avx2, simd::Backend::neon}) {
      if (!simd::backend_available(b)) continue;
      simd::set_backend(b);
      const LPSolution got = solve_lp(lp);
      CHECK(same_bits(ref.x, got.x));
      CHECK(same_bits(ref.y, got.y));
      CHECK(ref.iterations == got.iterations);
    }
    simd::set_backend(before);
  }
}
