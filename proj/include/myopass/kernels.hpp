#pragma once

// Reduction kernels behind every quadrature, norm and RMS in the toolkit.
//
// Each kernel has a scalar reference implementation and SIMD variants
// (AVX2+FMA on x86-64, NEON on AArch64). The widest variant the running CPU
// supports is selected on first use. Variants differ from the reference only
// by floating-point summation order.

#include <cstddef>
#include <span>
#include <string_view>

namespace myopass::kernels {

enum class Backend { kScalar, kAvx2, kNeon };

std::string_view backend_name(Backend backend);

/// True if this build contains `backend` and the CPU can execute it.
bool backend_supported(Backend backend);

/// Backend currently used by the dispatching entry points below.
Backend active_backend();

/// Pins dispatch to `backend`. Throws DomainError if unsupported. Intended
/// for equivalence tests and benchmarking.
void force_backend(Backend backend);

/// Restores automatic selection.
void reset_backend();

/// Sum of a[i] * b[i]. Spans must have equal length.
double dot(std::span<const double> a, std::span<const double> b);

/// Sum of a[i]^2.
double sum_squares(std::span<const double> a);

/// Trapezoidal integral of a[i] * b[i] on a uniform grid with step `dt`.
double trapz_dot(std::span<const double> a, std::span<const double> b,
                 double dt);

/// Trapezoidal integral of a[i]^2 on a uniform grid with step `dt`.
double trapz_squares(std::span<const double> a, double dt);

namespace scalar {
double dot(const double* a, const double* b, std::size_t n);
double sum_squares(const double* a, std::size_t n);
}  // namespace scalar

#if defined(__x86_64__) || defined(_M_X64)
#define MYOPASS_HAVE_AVX2_KERNELS 1
namespace avx2 {
double dot(const double* a, const double* b, std::size_t n);
double sum_squares(const double* a, std::size_t n);
}  // namespace avx2
#endif

#if defined(__aarch64__)
#define MYOPASS_HAVE_NEON_KERNELS 1
namespace neon {
double dot(const double* a, const double* b, std::size_t n);
double sum_squares(const double* a, std::size_t n);
}  // namespace neon
#endif

}  // namespace myopass::kernels
