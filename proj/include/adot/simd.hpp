#pragma once

// Data-parallel kernels used by the dense simplex and the LU refinement.
//
// Every backend must produce results bit-identical to the scalar reference:
// the vector paths use separate multiply and add (never FMA) and the only
// reduction (max_abs) is order-independent. Solver output therefore does not
// depend on which backend the dispatcher picked.

#include <cstddef>
#include <span>
#include <string_view>

namespace adot::simd {

enum class Backend { scalar, avx2, neon };

std::string_view backend_name(Backend backend) noexcept;

bool backend_available(Backend backend) noexcept;

/// Backend used by the dispatching entry points. Chosen on first use from
/// CPU features; `ADOT_SIMD=scalar|avx2|neon` overrides when available.
Backend active_backend() noexcept;

/// Throws std::invalid_argument when the backend is not available here.
void set_backend(Backend backend);

// y[i] += alpha * x[i]
void axpy(double alpha, std::span<const double> x, std::span<double> y) noexcept;
// x[i] *= alpha
void scale(double alpha, std::span<double> x) noexcept;
// max |x[i]|, 0 for an empty span
double max_abs(std::span<const double> x) noexcept;

namespace scalar {
void axpy(double alpha, std::span<const double> x, std::span<double> y) noexcept;
void scale(double alpha, std::span<double> x) noexcept;
double max_abs(std::span<const double> x) noexcept;
}  // namespace scalar

#if defined(__x86_64__) || defined(_M_X64)
#define ADOT_SIMD_HAVE_AVX2_BUILD 1
namespace avx2 {
void axpy(double alpha, std::span<const double> x, std::span<double> y) noexcept;
void scale(double alpha, std::span<double> x) noexcept;
double max_abs(std::span<const double> x) noexcept;
}  // namespace avx2
#endif

#if defined(__aarch64__) && defined(__ARM_NEON)
#define ADOT_SIMD_HAVE_NEON_BUILD 1
namespace neon {
void axpy(double alpha, std::span<const double> x, std::span<double> y) noexcept;
void scale(double alpha, std::span<double> x) noexcept;
double max_abs(std::span<const double> x) noexcept;
}  // namespace neon
#endif

}  // namespace adot::simd
