#pragma once

// Central finite differences in double precision.

#include <algorithm>
#include <cmath>
#include <functional>

#include "progfill/autograd.hpp"
#include "progfill/rng.hpp"

namespace progfill::testing {

inline Tensor<double> random_tensor(Shape s, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Tensor<double> t(s);
  for (auto& v : t.storage()) v = rng.uniform(lo, hi);
  return t;
}

inline Tensor<double> numeric_gradient(const std::function<double(const Tensor<double>&)>& f, const Tensor<double>& x,
                                       double h = 1e-6) {
  Tensor<double> g(x.shape());
  Tensor<double> probe = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double keep = probe[i];
    probe[i] = keep + h;
    const double up = f(probe);
    probe[i] = keep - h;
    const double down = f(probe);
    probe[i] = keep;
    g[i] = (up - down) / (2 * h);
  }
  return g;
}

// max |a - n| / max(max |n|, floor).
inline double relative_error(const Tensor<double>& analytic, const Tensor<double>& numeric, double floor = 1e-8) {
  double diff = 0.0;
  double scale = 0.0;
  for (std::size_t i = 0; i < numeric.size(); ++i) {
    diff = std::max(diff, std::abs(analytic[i] - numeric[i]));
    scale = std::max(scale, std::abs(numeric[i]));
  }
  return diff / std::max(scale, floor);
}

// Checks d<r, op(x)>/dx for a graph op built by `op` from a fresh leaf.
inline double op_gradient_error(const std::function<Var<double>(const Var<double>&)>& op, const Tensor<double>& x,
                                std::uint64_t seed = 9) {
  Rng rng(seed);
  auto leaf_x = leaf(x, true);
  auto out = op(leaf_x);
  const Tensor<double> r = random_tensor(out->value.shape(), rng);
  backward(out, r);
  Tensor<double> analytic = leaf_x->grad.empty() ? Tensor<double>(x.shape()) : leaf_x->grad;
  auto f = [&](const Tensor<double>& probe) {
    NoGradGuard ng;
    auto o = op(constant(probe));
    double s = 0;
    for (std::size_t i = 0; i < r.size(); ++i) s += r[i] * o->value[i];
    return s;
  };
  return relative_error(analytic, numeric_gradient(f, x));
}

}  // namespace progfill::testing
