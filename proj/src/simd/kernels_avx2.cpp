// Compiled with -mavx2 -mfma. Keep this file free of inline standard-library
// templates so no AVX2 instantiation can leak into the scalar build.

#include <immintrin.h>

#include "kernels_impl.hpp"

namespace progfill::simd::avx2 {
namespace {

struct F32 {
  using scalar = float;
  using vec = __m256;
  static constexpr int lanes = 8;
  static vec load(const float* p) { return _mm256_loadu_ps(p); }
  static void store(float* p, vec v) { _mm256_storeu_ps(p, v); }
  static vec set1(float v) { return _mm256_set1_ps(v); }
  static vec zero() { return _mm256_setzero_ps(); }
  static vec fmadd(vec a, vec b, vec c) { return _mm256_fmadd_ps(a, b, c); }
  static vec add(vec a, vec b) { return _mm256_add_ps(a, b); }
  static float hsum(vec v) {
    __m128 lo = _mm256_castps256_ps128(v);
    __m128 hi = _mm256_extractf128_ps(v, 1);
    lo = _mm_add_ps(lo, hi);
    __m128 sh = _mm_movehdup_ps(lo);
    __m128 s = _mm_add_ps(lo, sh);
    sh = _mm_movehl_ps(sh, s);
    s = _mm_add_ss(s, sh);
    return _mm_cvtss_f32(s);
  }
};

struct F64 {
  using scalar = double;
  using vec = __m256d;
  static constexpr int lanes = 4;
  static vec load(const double* p) { return _mm256_loadu_pd(p); }
  static void store(double* p, vec v) { _mm256_storeu_pd(p, v); }
  static vec set1(double v) { return _mm256_set1_pd(v); }
  static vec zero() { return _mm256_setzero_pd(); }
  static vec fmadd(vec a, vec b, vec c) { return _mm256_fmadd_pd(a, b, c); }
  static vec add(vec a, vec b) { return _mm256_add_pd(a, b); }
  static double hsum(vec v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    __m128d h = _mm_unpackhi_pd(lo, lo);
    return _mm_cvtsd_f64(_mm_add_sd(lo, h));
  }
};

template <class V>
void axpy_impl(std::size_t n, typename V::scalar alpha, const typename V::scalar* x,
               typename V::scalar* y) {
  const auto va = V::set1(alpha);
  std::size_t i = 0;
  for (; i + 2 * V::lanes <= n; i += 2 * V::lanes) {
    V::store(y + i, V::fmadd(va, V::load(x + i), V::load(y + i)));
    V::store(y + i + V::lanes, V::fmadd(va, V::load(x + i + V::lanes), V::load(y + i + V::lanes)));
  }
  for (; i + V::lanes <= n; i += V::lanes) V::store(y + i, V::fmadd(va, V::load(x + i), V::load(y + i)));
  for (; i < n; ++i) y[i] += alpha * x[i];
}

template <class V>
typename V::scalar dot_impl(std::size_t n, const typename V::scalar* x, const typename V::scalar* y) {
  auto acc0 = V::zero();
  auto acc1 = V::zero();
  std::size_t i = 0;
  for (; i + 2 * V::lanes <= n; i += 2 * V::lanes) {
    acc0 = V::fmadd(V::load(x + i), V::load(y + i), acc0);
    acc1 = V::fmadd(V::load(x + i + V::lanes), V::load(y + i + V::lanes), acc1);
  }
  for (; i + V::lanes <= n; i += V::lanes) acc0 = V::fmadd(V::load(x + i), V::load(y + i), acc0);
  typename V::scalar acc = V::hsum(V::add(acc0, acc1));
  for (; i < n; ++i) acc += x[i] * y[i];
  return acc;
}

// C[m x n] += A * B where A(i, p) = a[i * row_stride + p * col_stride].
// Four rank-1 updates are fused per pass over a row of C.
template <class V>
void gemm_strided_a(int m, int n, int k, const typename V::scalar* a, long row_stride, long col_stride,
                    const typename V::scalar* b, typename V::scalar* c) {
  using S = typename V::scalar;
  for (int i = 0; i < m; ++i) {
    S* crow = c + static_cast<long>(i) * n;
    const S* arow = a + static_cast<long>(i) * row_stride;
    int p = 0;
    for (; p + 4 <= k; p += 4) {
      const S s0 = arow[(p + 0) * col_stride];
      const S s1 = arow[(p + 1) * col_stride];
      const S s2 = arow[(p + 2) * col_stride];
      const S s3 = arow[(p + 3) * col_stride];
      const auto a0 = V::set1(s0);
      const auto a1 = V::set1(s1);
      const auto a2 = V::set1(s2);
      const auto a3 = V::set1(s3);
      const S* b0 = b + static_cast<long>(p) * n;
      const S* b1 = b0 + n;
      const S* b2 = b1 + n;
      const S* b3 = b2 + n;
      int j = 0;
      for (; j + V::lanes <= n; j += V::lanes) {
        auto acc = V::load(crow + j);
        acc = V::fmadd(a0, V::load(b0 + j), acc);
        acc = V::fmadd(a1, V::load(b1 + j), acc);
        acc = V::fmadd(a2, V::load(b2 + j), acc);
        acc = V::fmadd(a3, V::load(b3 + j), acc);
        V::store(crow + j, acc);
      }
      for (; j < n; ++j) crow[j] += s0 * b0[j] + s1 * b1[j] + s2 * b2[j] + s3 * b3[j];
    }
    for (; p < k; ++p) axpy_impl<V>(static_cast<std::size_t>(n), arow[p * col_stride], b + static_cast<long>(p) * n, crow);
  }
}

template <class V>
void gemm_nt_impl(int m, int n, int k, const typename V::scalar* a, const typename V::scalar* b,
                  typename V::scalar* c) {
  for (int i = 0; i < m; ++i) {
    const auto* arow = a + static_cast<long>(i) * k;
    auto* crow = c + static_cast<long>(i) * n;
    for (int j = 0; j < n; ++j)
      crow[j] += dot_impl<V>(static_cast<std::size_t>(k), arow, b + static_cast<long>(j) * k);
  }
}

}  // namespace

void gemm_nn(int m, int n, int k, const float* a, const float* b, float* c) { gemm_strided_a<F32>(m, n, k, a, k, 1, b, c); }
void gemm_nn(int m, int n, int k, const double* a, const double* b, double* c) { gemm_strided_a<F64>(m, n, k, a, k, 1, b, c); }
void gemm_nt(int m, int n, int k, const float* a, const float* b, float* c) { gemm_nt_impl<F32>(m, n, k, a, b, c); }
void gemm_nt(int m, int n, int k, const double* a, const double* b, double* c) { gemm_nt_impl<F64>(m, n, k, a, b, c); }
void gemm_tn(int m, int n, int k, const float* a, const float* b, float* c) { gemm_strided_a<F32>(m, n, k, a, 1, m, b, c); }
void gemm_tn(int m, int n, int k, const double* a, const double* b, double* c) { gemm_strided_a<F64>(m, n, k, a, 1, m, b, c); }
void axpy(std::size_t n, float alpha, const float* x, float* y) { axpy_impl<F32>(n, alpha, x, y); }
void axpy(std::size_t n, double alpha, const double* x, double* y) { axpy_impl<F64>(n, alpha, x, y); }
float dot(std::size_t n, const float* x, const float* y) { return dot_impl<F32>(n, x, y); }
double dot(std::size_t n, const double* x, const double* y) { return dot_impl<F64>(n, x, y); }

}  // namespace progfill::simd::avx2
