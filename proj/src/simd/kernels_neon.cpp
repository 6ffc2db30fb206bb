#include <arm_neon.h>

#include "kernels_impl.hpp"

namespace progfill::simd::neon {
namespace {

template <typename T>
struct Traits;

template <>
struct Traits<float> {
  using vec = float32x4_t;
  static constexpr int lanes = 4;
  static vec load(const float* p) { return vld1q_f32(p); }
  static void store(float* p, vec v) { vst1q_f32(p, v); }
  static vec set1(float v) { return vdupq_n_f32(v); }
  static vec zero() { return vdupq_n_f32(0.0f); }
  static vec fmadd(vec a, vec b, vec c) { return vfmaq_f32(c, a, b); }
  static float hsum(vec v) { return vaddvq_f32(v); }
};

template <>
struct Traits<double> {
  using vec = float64x2_t;
  static constexpr int lanes = 2;
  static vec load(const double* p) { return vld1q_f64(p); }
  static void store(double* p, vec v) { vst1q_f64(p, v); }
  static vec set1(double v) { return vdupq_n_f64(v); }
  static vec zero() { return vdupq_n_f64(0.0); }
  static vec fmadd(vec a, vec b, vec c) { return vfmaq_f64(c, a, b); }
  static double hsum(vec v) { return vaddvq_f64(v); }
};

template <typename T>
void axpy_impl(std::size_t n, T alpha, const T* x, T* y) {
  using V = Traits<T>;
  const auto va = V::set1(alpha);
  std::size_t i = 0;
  for (; i + V::lanes <= n; i += V::lanes) V::store(y + i, V::fmadd(va, V::load(x + i), V::load(y + i)));
  for (; i < n; ++i) y[i] += alpha * x[i];
}

template <typename T>
T dot_impl(std::size_t n, const T* x, const T* y) {
  using V = Traits<T>;
  auto acc = V::zero();
  std::size_t i = 0;
  for (; i + V::lanes <= n; i += V::lanes) acc = V::fmadd(V::load(x + i), V::load(y + i), acc);
  T s = V::hsum(acc);
  for (; i < n; ++i) s += x[i] * y[i];
  return s;
}

template <typename T>
void gemm_strided_a(int m, int n, int k, const T* a, long row_stride, long col_stride, const T* b, T* c) {
  for (int i = 0; i < m; ++i)
    for (int p = 0; p < k; ++p)
      axpy_impl<T>(static_cast<std::size_t>(n), a[i * row_stride + p * col_stride], b + static_cast<long>(p) * n,
                   c + static_cast<long>(i) * n);
}

template <typename T>
void gemm_nt_impl(int m, int n, int k, const T* a, const T* b, T* c) {
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j)
      c[static_cast<long>(i) * n + j] +=
          dot_impl<T>(static_cast<std::size_t>(k), a + static_cast<long>(i) * k, b + static_cast<long>(j) * k);
}

}  // namespace

void gemm_nn(int m, int n, int k, const float* a, const float* b, float* c) { gemm_strided_a(m, n, k, a, k, 1, b, c); }
void gemm_nn(int m, int n, int k, const double* a, const double* b, double* c) { gemm_strided_a(m, n, k, a, k, 1, b, c); }
void gemm_nt(int m, int n, int k, const float* a, const float* b, float* c) { gemm_nt_impl(m, n, k, a, b, c); }
void gemm_nt(int m, int n, int k, const double* a, const double* b, double* c) { gemm_nt_impl(m, n, k, a, b, c); }
void gemm_tn(int m, int n, int k, const float* a, const float* b, float* c) { gemm_strided_a(m, n, k, a, 1, m, b, c); }
void gemm_tn(int m, int n, int k, const double* a, const double* b, double* c) { gemm_strided_a(m, n, k, a, 1, m, b, c); }
void axpy(std::size_t n, float alpha, const float* x, float* y) { axpy_impl(n, alpha, x, y); }
void axpy(std::size_t n, double alpha, const double* x, double* y) { axpy_impl(n, alpha, x, y); }
float dot(std::size_t n, const float* x, const float* y) { return dot_impl(n, x, y); }
double dot(std::size_t n, const double* x, const double* y) { return dot_impl(n, x, y); }

}  // namespace progfill::simd::neon
