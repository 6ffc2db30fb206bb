#pragma once

// Dense inner loops used by the convolution and dense layers. Every kernel has
// a portable scalar reference and, where the target supports it, a vector
// variant; the active variant is picked once at startup from CPU features.

#include <cstddef>
#include <string_view>

namespace progfill::simd {

enum class Isa { scalar, avx2, neon };

std::string_view isa_name(Isa isa);

// Best variant this CPU can run.
Isa detected_isa();

// Variant the dispatching entry points currently route to.
Isa active_isa();

// Throws std::invalid_argument when the CPU cannot run `isa`.
void set_active_isa(Isa isa);

bool isa_supported(Isa isa);

// C[m x n] += A[m x k] * B[k x n], all row-major and densely packed.
template <typename T>
void gemm_nn(int m, int n, int k, const T* a, const T* b, T* c);

// C[m x n] += A[m x k] * B[n x k]^T
template <typename T>
void gemm_nt(int m, int n, int k, const T* a, const T* b, T* c);

// C[m x n] += A[k x m]^T * B[k x n]
template <typename T>
void gemm_tn(int m, int n, int k, const T* a, const T* b, T* c);

// y += alpha * x
template <typename T>
void axpy(std::size_t n, T alpha, const T* x, T* y);

template <typename T>
T dot(std::size_t n, const T* x, const T* y);

}  // namespace progfill::simd
