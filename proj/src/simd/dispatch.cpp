#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>

#include "adot/simd.hpp"

namespace adot::simd {

namespace {

struct KernelTable {
  Backend backend;
  void (*axpy)(double, std::span<const double>, std::span<double>) noexcept;
  void (*scale)(double, std::span<double>) noexcept;
  double (*max_abs)(std::span<const double>) noexcept;
};

constexpr KernelTable kScalarTable{Backend::scalar, &scalar::axpy, &scalar::scale,
                                   &scalar::max_abs};
#ifdef ADOT_SIMD_HAVE_AVX2_BUILD
constexpr KernelTable kAvx2Table{Backend::avx2, &avx2::axpy, &avx2::scale, &avx2::max_abs};
#endif
#ifdef ADOT_SIMD_HAVE_NEON_BUILD
constexpr KernelTable kNeonTable{Backend::neon, &neon::axpy, &neon::scale, &neon::max_abs};
#endif

const KernelTable* table_for(Backend backend) noexcept {
  switch (backend) {
    case Backend::scalar:
      return &kScalarTable;
    case Backend::avx2:
#ifdef ADOT_SIMD_HAVE_AVX2_BUILD
      if (__builtin_cpu_supports("avx2")) return &kAvx2Table;
#endif
      return nullptr;
    case Backend::neon:
#ifdef ADOT_SIMD_HAVE_NEON_BUILD
      return &kNeonTable;
#else
      return nullptr;
#endif
  }
  return nullptr;
}

const KernelTable* detect() noexcept {
  if (const char* env = std::getenv("ADOT_SIMD")) {
    const std::string want(env);
    for (Backend b : {Backend::scalar, Backend::avx2, Backend::neon}) {
      if (want == backend_name(b)) {
        if (const KernelTable* t = table_for(b)) return t;
      }
    }
  }
  for (Backend b : {Backend::avx2, Backend::neon}) {
    if (const KernelTable* t = table_for(b)) return t;
  }
  return &kScalarTable;
}

std::atomic<const KernelTable*> g_table{nullptr};

const KernelTable& table() noexcept {
  const KernelTable* t = g_table.load(std::memory_order_acquire);
  if (t == nullptr) {
    t = detect();
    g_table.store(t, std::memory_order_release);
  }
  return *t;
}

}  // namespace

std::string_view backend_name(Backend backend) noexcept {
  switch (backend) {
    case Backend::scalar: return "scalar";
    case Backend::avx2: return "avx2";
    case Backend::neon: return "neon";
  }
  return "unknown";
}

bool backend_available(Backend backend) noexcept { return table_for(backend) != nullptr; }

Backend active_backend() noexcept { return table().backend; }

void set_backend(Backend backend) {
  const KernelTable* t = table_for(backend);
  if (t == nullptr) {
    throw std::invalid_argument("simd backend not available: " +
                                std::string(backend_name(backend)));
  }
  g_table.store(t, std::memory_order_release);
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) noexcept {
  table().axpy(alpha, x, y);
}

void scale(double alpha, std::span<double> x) noexcept { table().scale(alpha, x); }

double max_abs(std::span<const double> x) noexcept { return table().max_abs(x); }

}  // namespace adot::simd
