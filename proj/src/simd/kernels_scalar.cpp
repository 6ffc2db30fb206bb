#include "kernels_impl.hpp"

namespace progfill::simd::scalar {
namespace {

template <typename T>
void axpy_impl(std::size_t n, T alpha, const T* x, T* y) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

template <typename T>
T dot_impl(std::size_t n, const T* x, const T* y) {
  T acc = 0;
  for (std::size_t i = 0; i < n; ++i) acc += x[i] * y[i];
  return acc;
}

template <typename T>
void gemm_nn_impl(int m, int n, int k, const T* a, const T* b, T* c) {
  for (int i = 0; i < m; ++i) {
    T* crow = c + static_cast<std::size_t>(i) * n;
    const T* arow = a + static_cast<std::size_t>(i) * k;
    for (int p = 0; p < k; ++p) {
      axpy_impl<T>(static_cast<std::size_t>(n), arow[p], b + static_cast<std::size_t>(p) * n, crow);
    }
  }
}

template <typename T>
void gemm_nt_impl(int m, int n, int k, const T* a, const T* b, T* c) {
  for (int i = 0; i < m; ++i) {
    const T* arow = a + static_cast<std::size_t>(i) * k;
    T* crow = c + static_cast<std::size_t>(i) * n;
    for (int j = 0; j < n; ++j)
      crow[j] += dot_impl<T>(static_cast<std::size_t>(k), arow, b + static_cast<std::size_t>(j) * k);
  }
}

template <typename T>
void gemm_tn_impl(int m, int n, int k, const T* a, const T* b, T* c) {
  for (int p = 0; p < k; ++p) {
    const T* arow = a + static_cast<std::size_t>(p) * m;
    const T* brow = b + static_cast<std::size_t>(p) * n;
    for (int i = 0; i < m; ++i) {
      axpy_impl<T>(static_cast<std::size_t>(n), arow[i], brow, c + static_cast<std::size_t>(i) * n);
    }
  }
}

}  // namespace

void gemm_nn(int m, int n, int k, const float* a, const float* b, float* c) { gemm_nn_impl(m, n, k, a, b, c); }
void gemm_nn(int m, int n, int k, const double* a, const double* b, double* c) { gemm_nn_impl(m, n, k, a, b, c); }
void gemm_nt(int m, int n, int k, const float* a, const float* b, float* c) { gemm_nt_impl(m, n, k, a, b, c); }
void gemm_nt(int m, int n, int k, const double* a, const double* b, double* c) { gemm_nt_impl(m, n, k, a, b, c); }
void gemm_tn(int m, int n, int k, const float* a, const float* b, float* c) { gemm_tn_impl(m, n, k, a, b, c); }
void gemm_tn(int m, int n, int k, const double* a, const double* b, double* c) { gemm_tn_impl(m, n, k, a, b, c); }
void axpy(std::size_t n, float alpha, const float* x, float* y) { axpy_impl(n, alpha, x, y); }
void axpy(std::size_t n, double alpha, const double* x, double* y) { axpy_impl(n, alpha, x, y); }
float dot(std::size_t n, const float* x, const float* y) { return dot_impl(n, x, y); }
double dot(std::size_t n, const double* x, const double* y) { return dot_impl(n, x, y); }

}  // namespace progfill::simd::scalar
