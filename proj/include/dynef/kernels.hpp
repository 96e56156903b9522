#pragma once

#include <cstddef>

// Dense inner loops used by the model evaluation and training paths.
// A scalar reference implementation always exists; SIMD variants are
// selected at runtime when the CPU supports them (DYNEF_KERNEL=scalar|avx2|
// neon|auto overrides the choice). Within one process the selection is
// fixed, so repeated runs with the same seed stay bit-identical.

namespace dynef::kernels {

enum class Backend { scalar, avx2, neon };

const char* backend_name(Backend b);

/// Backend in use (resolved once, honoring DYNEF_KERNEL on first call).
Backend active();

/// Force a backend; returns false if it was not compiled in or the CPU
/// lacks the feature.
bool select(Backend b);

bool available(Backend b);

/// sum_i x[i] * y[i]
double dot(const double* x, const double* y, std::size_t n);

/// y[i] += a * x[i]. All backends perform one mul and one add per element,
/// so results are bit-identical across backends.
void axpy(double a, const double* x, double* y, std::size_t n);

// Per-backend entry points, exposed for equivalence tests.
double dot_scalar(const double* x, const double* y, std::size_t n);
void axpy_scalar(double a, const double* x, double* y, std::size_t n);
#if DYNEF_HAVE_AVX2
double dot_avx2(const double* x, const double* y, std::size_t n);
void axpy_avx2(double a, const double* x, double* y, std::size_t n);
#endif
#if DYNEF_HAVE_NEON
double dot_neon(const double* x, const double* y, std::size_t n);
void axpy_neon(double a, const double* x, double* y, std::size_t n);
#endif

}  // namespace dynef::kernels
