#pragma once

// Per-ISA kernel entry points. Only dispatch.cpp and the equivalence tests
// call these directly.

#include <cstddef>

#define PROGFILL_DECLARE_KERNELS(ns)                                                      \
  namespace ns {                                                                          \
  void gemm_nn(int m, int n, int k, const float* a, const float* b, float* c);            \
  void gemm_nn(int m, int n, int k, const double* a, const double* b, double* c);         \
  void gemm_nt(int m, int n, int k, const float* a, const float* b, float* c);            \
  void gemm_nt(int m, int n, int k, const double* a, const double* b, double* c);         \
  void gemm_tn(int m, int n, int k, const float* a, const float* b, float* c);            \
  void gemm_tn(int m, int n, int k, const double* a, const double* b, double* c);         \
  void axpy(std::size_t n, float alpha, const float* x, float* y);                        \
  void axpy(std::size_t n, double alpha, const double* x, double* y);                     \
  float dot(std::size_t n, const float* x, const float* y);                               \
  double dot(std::size_t n, const double* x, const double* y);                            \
  }

namespace progfill::simd {
PROGFILL_DECLARE_KERNELS(scalar)
#if defined(PROGFILL_HAVE_AVX2)
PROGFILL_DECLARE_KERNELS(avx2)
#endif
#if defined(PROGFILL_HAVE_NEON)
PROGFILL_DECLARE_KERNELS(neon)
#endif
}  // namespace progfill::simd

#undef PROGFILL_DECLARE_KERNELS
