#pragma once

// Differentiable tensor ops. All are instantiated for float (training and
// inference) and double (gradient checking).

#include "progfill/autograd.hpp"

namespace progfill::ops {

// x: N x Cin x H x W, weight: Cout x Cin x k x k, bias: 1 x Cout x 1 x 1 or
// null. Zero padding of `pad` pixels on every side.
template <typename T>
Var<T> conv2d(const Var<T>& x, const Var<T>& weight, const Var<T>& bias, int stride, int pad);

// Per-sample, per-channel normalization without affine parameters.
template <typename T>
Var<T> instance_norm(const Var<T>& x, T eps = T(1e-5));

template <typename T>
Var<T> leaky_relu(const Var<T>& x, T slope);

template <typename T>
Var<T> relu(const Var<T>& x);

template <typename T>
Var<T> tanh(const Var<T>& x);

template <typename T>
Var<T> sigmoid(const Var<T>& x);

template <typename T>
Var<T> add(const Var<T>& a, const Var<T>& b);

// (1 - alpha) * a + alpha * b with a constant alpha.
template <typename T>
Var<T> lerp(const Var<T>& a, const Var<T>& b, T alpha);

template <typename T>
Var<T> concat_channels(const Var<T>& a, const Var<T>& b);

template <typename T>
Var<T> avg_pool2(const Var<T>& x);

template <typename T>
Var<T> max_pool2(const Var<T>& x);

template <typename T>
Var<T> upsample_nearest2(const Var<T>& x);

template <typename T>
Var<T> resize_bilinear(const Var<T>& x, int out_h, int out_w);

// Flattens each sample of x and applies weight (out x D x 1 x 1) plus bias
// (1 x out x 1 x 1). Result is N x out x 1 x 1.
template <typename T>
Var<T> dense(const Var<T>& x, const Var<T>& weight, const Var<T>& bias);

// Non-differentiable helpers shared with the image module.
template <typename T>
Tensor<T> avg_pool(const Tensor<T>& x, int factor);

template <typename T>
Tensor<T> bilinear(const Tensor<T>& x, int out_h, int out_w);

}  // namespace progfill::ops
