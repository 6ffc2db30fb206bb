#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>

#include "kernels_impl.hpp"
#include "progfill/simd/kernels.hpp"

namespace progfill::simd {
namespace {

Isa probe() {
#if defined(PROGFILL_HAVE_AVX2)
  __builtin_cpu_init();
  if (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma")) return Isa::avx2;
#endif
#if defined(PROGFILL_HAVE_NEON)
  return Isa::neon;
#endif
  return Isa::scalar;
}

// PROGFILL_ISA=scalar forces the reference kernels, e.g. for bisecting a
// numerical difference between machines.
Isa initial_isa() {
  const Isa best = probe();
  if (const char* env = std::getenv("PROGFILL_ISA")) {
    const std::string want(env);
    if (want == "scalar") return Isa::scalar;
  }
  return best;
}

std::atomic<Isa>& active() {
  static std::atomic<Isa> isa{initial_isa()};
  return isa;
}

}  // namespace

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::scalar: return "scalar";
    case Isa::avx2: return "avx2";
    case Isa::neon: return "neon";
  }
  return "unknown";
}

Isa detected_isa() {
  static const Isa isa = probe();
  return isa;
}

bool isa_supported(Isa isa) {
  if (isa == Isa::scalar) return true;
  return isa == detected_isa();
}

Isa active_isa() { return active().load(std::memory_order_relaxed); }

void set_active_isa(Isa isa) {
  if (!isa_supported(isa)) throw std::invalid_argument("ISA not supported on this CPU: " + std::string(isa_name(isa)));
  active().store(isa, std::memory_order_relaxed);
}

#if defined(PROGFILL_HAVE_AVX2)
#define PROGFILL_ROUTE(fn, ...)                                   \
  switch (active_isa()) {                                         \
    case Isa::avx2: return avx2::fn(__VA_ARGS__);                 \
    default: return scalar::fn(__VA_ARGS__);                      \
  }
#elif defined(PROGFILL_HAVE_NEON)
#define PROGFILL_ROUTE(fn, ...)                                   \
  switch (active_isa()) {                                         \
    case Isa::neon: return neon::fn(__VA_ARGS__);                 \
    default: return scalar::fn(__VA_ARGS__);                      \
  }
#else
#define PROGFILL_ROUTE(fn, ...) return scalar::fn(__VA_ARGS__);
#endif

template <typename T>
void gemm_nn(int m, int n, int k, const T* a, const T* b, T* c) {
  PROGFILL_ROUTE(gemm_nn, m, n, k, a, b, c)
}

template <typename T>
void gemm_nt(int m, int n, int k, const T* a, const T* b, T* c) {
  PROGFILL_ROUTE(gemm_nt, m, n, k, a, b, c)
}

template <typename T>
void gemm_tn(int m, int n, int k, const T* a, const T* b, T* c) {
  PROGFILL_ROUTE(gemm_tn, m, n, k, a, b, c)
}

template <typename T>
void axpy(std::size_t n, T alpha, const T* x, T* y) {
  PROGFILL_ROUTE(axpy, n, alpha, x, y)
}

template <typename T>
T dot(std::size_t n, const T* x, const T* y) {
  PROGFILL_ROUTE(dot, n, x, y)
}

#undef PROGFILL_ROUTE

template void gemm_nn<float>(int, int, int, const float*, const float*, float*);
template void gemm_nn<double>(int, int, int, const double*, const double*, double*);
template void gemm_nt<float>(int, int, int, const float*, const float*, float*);
template void gemm_nt<double>(int, int, int, const double*, const double*, double*);
template void gemm_tn<float>(int, int, int, const float*, const float*, float*);
template void gemm_tn<double>(int, int, int, const double*, const double*, double*);
template void axpy<float>(std::size_t, float, const float*, float*);
template void axpy<double>(std::size_t, double, const double*, double*);
template float dot<float>(std::size_t, const float*, const float*);
template double dot<double>(std::size_t, const double*, const double*);

}  // namespace progfill::simd
