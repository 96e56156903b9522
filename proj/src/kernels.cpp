#include "dynef/kernels.hpp"

#include <cstdlib>
#include <cstring>

namespace dynef::kernels {

double dot_scalar(const double* x, const double* y, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += x[i] * y[i];
  return acc;
}

void axpy_scalar(double a, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

const char* backend_name(Backend b) {
  switch (b) {
    case Backend::scalar: return "scalar";
    case Backend::avx2: return "avx2";
    case Backend::neon: return "neon";
  }
  return "?";
}

bool available(Backend b) {
  switch (b) {
    case Backend::scalar:
      return true;
    case Backend::avx2:
#if DYNEF_HAVE_AVX2
      return __builtin_cpu_supports("avx2");
#else
      return false;
#endif
    case Backend::neon:
#if DYNEF_HAVE_NEON
      return true;
#else
      return false;
#endif
  }
  return false;
}

namespace {

struct Dispatch {
  Backend backend;
  double (*dot)(const double*, const double*, std::size_t);
  void (*axpy)(double, const double*, double*, std::size_t);
};

Dispatch make_dispatch(Backend b) {
  switch (b) {
#if DYNEF_HAVE_AVX2
    case Backend::avx2:
      return {Backend::avx2, dot_avx2, axpy_avx2};
#endif
#if DYNEF_HAVE_NEON
    case Backend::neon:
      return {Backend::neon, dot_neon, axpy_neon};
#endif
    default:
      return {Backend::scalar, dot_scalar, axpy_scalar};
  }
}

Backend pick_default() {
  if (const char* env = std::getenv("DYNEF_KERNEL")) {
    if (std::strcmp(env, "scalar") == 0) return Backend::scalar;
    if (std::strcmp(env, "avx2") == 0 && available(Backend::avx2)) return Backend::avx2;
    if (std::strcmp(env, "neon") == 0 && available(Backend::neon)) return Backend::neon;
    // "auto" or an unusable request falls through to detection
  }
  if (available(Backend::avx2)) return Backend::avx2;
  if (available(Backend::neon)) return Backend::neon;
  return Backend::scalar;
}

Dispatch& dispatch() {
  static Dispatch d = make_dispatch(pick_default());
  return d;
}

}  // namespace

Backend active() { return dispatch().backend; }

bool select(Backend b) {
  if (!available(b)) return false;
  dispatch() = make_dispatch(b);
  return true;
}

double dot(const double* x, const double* y, std::size_t n) {
  return dispatch().dot(x, y, n);
}

void axpy(double a, const double* x, double* y, std::size_t n) {
  dispatch().axpy(a, x, y, n);
}

}  // namespace dynef::kernels
