#include "progfill/ops.hpp"

#include <cmath>
#include <cstring>

#include "progfill/resample.hpp"
#include "progfill/simd/kernels.hpp"

namespace progfill {

std::vector<LinearTap> linear_taps(int in_size, int out_size) {
  std::vector<LinearTap> taps(static_cast<std::size_t>(out_size));
  const double scale = static_cast<double>(in_size) / out_size;
  for (int o = 0; o < out_size; ++o) {
    double src = (o + 0.5) * scale - 0.5;
    if (src < 0.0) src = 0.0;
    int lo = static_cast<int>(std::floor(src));
    LinearTap tap;
    if (lo >= in_size - 1) {
      tap.lo = tap.hi = in_size - 1;
      tap.weight = 0.0;
    } else {
      tap.lo = lo;
      tap.hi = lo + 1;
      tap.weight = src - lo;
    }
    taps[static_cast<std::size_t>(o)] = tap;
  }
  return taps;
}

namespace ops {
namespace {

int conv_out(int in, int k, int stride, int pad) { return (in + 2 * pad - k) / stride + 1; }

template <typename T>
void im2col(const T* x, int channels, int h, int w, int k, int stride, int pad, int oh, int ow, T* col) {
  const std::size_t plane = static_cast<std::size_t>(oh) * ow;
  for (int c = 0; c < channels; ++c)
    for (int ky = 0; ky < k; ++ky)
      for (int kx = 0; kx < k; ++kx) {
        T* dst = col + (static_cast<std::size_t>(c * k + ky) * k + kx) * plane;
        const T* src = x + static_cast<std::size_t>(c) * h * w;
        for (int oy = 0; oy < oh; ++oy) {
          const int iy = oy * stride - pad + ky;
          T* row = dst + static_cast<std::size_t>(oy) * ow;
          if (iy < 0 || iy >= h) {
            std::fill(row, row + ow, T(0));
            continue;
          }
          for (int ox = 0; ox < ow; ++ox) {
            const int ix = ox * stride - pad + kx;
            row[ox] = (ix < 0 || ix >= w) ? T(0) : src[static_cast<std::size_t>(iy) * w + ix];
          }
        }
      }
}

template <typename T>
void col2im(const T* col, int channels, int h, int w, int k, int stride, int pad, int oh, int ow, T* dx) {
  const std::size_t plane = static_cast<std::size_t>(oh) * ow;
  for (int c = 0; c < channels; ++c)
    for (int ky = 0; ky < k; ++ky)
      for (int kx = 0; kx < k; ++kx) {
        const T* src = col + (static_cast<std::size_t>(c * k + ky) * k + kx) * plane;
        T* dst = dx + static_cast<std::size_t>(c) * h * w;
        for (int oy = 0; oy < oh; ++oy) {
          const int iy = oy * stride - pad + ky;
          if (iy < 0 || iy >= h) continue;
          for (int ox = 0; ox < ow; ++ox) {
            const int ix = ox * stride - pad + kx;
            if (ix >= 0 && ix < w) dst[static_cast<std::size_t>(iy) * w + ix] += src[static_cast<std::size_t>(oy) * ow + ox];
          }
        }
      }
}

template <typename T, typename F, typename G>
Var<T> elementwise(const Var<T>& x, F forward, G derivative_from_output) {
  Tensor<T> out(x->value.shape());
  const T* in = x->value.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = forward(in[i]);
  return make_result<T>(std::move(out), {x}, [x, derivative_from_output](Node<T>& self) {
    auto& gx = x->grad_buffer();
    for (std::size_t i = 0; i < gx.size(); ++i)
      gx[i] += self.grad[i] * derivative_from_output(x->value[i], self.value[i]);
  });
}

}  // namespace

template <typename T>
Var<T> conv2d(const Var<T>& x, const Var<T>& weight, const Var<T>& bias, int stride, int pad) {
  const Shape xs = x->value.shape();
  const Shape ws = weight->value.shape();
  if (ws.c != xs.c || ws.h != ws.w)
    throw InvalidInput("conv2d: weight " + ws.str() + " incompatible with input " + xs.str());
  const int k = ws.h;
  const int cout = ws.n;
  const int oh = conv_out(xs.h, k, stride, pad);
  const int ow = conv_out(xs.w, k, stride, pad);
  if (oh <= 0 || ow <= 0) throw InvalidInput("conv2d: input too small for kernel");
  const int kdim = xs.c * k * k;
  const int pixels = oh * ow;
  const bool direct = (k == 1 && stride == 1 && pad == 0);

  Tensor<T> out(xs.n, cout, oh, ow);
  std::vector<T> col(direct ? 0 : static_cast<std::size_t>(kdim) * pixels);
  for (int n = 0; n < xs.n; ++n) {
    T* dst = out.sample(n);
    if (bias)
      for (int co = 0; co < cout; ++co) std::fill_n(dst + static_cast<std::size_t>(co) * pixels, pixels, bias->value[co]);
    const T* cols = x->value.sample(n);
    if (!direct) {
      im2col(x->value.sample(n), xs.c, xs.h, xs.w, k, stride, pad, oh, ow, col.data());
      cols = col.data();
    }
    simd::gemm_nn<T>(cout, pixels, kdim, weight->value.data(), cols, dst);
  }

  std::vector<Var<T>> inputs{x, weight};
  if (bias) inputs.push_back(bias);
  return make_result<T>(std::move(out), std::move(inputs), [=](Node<T>& self) {
    std::vector<T> colbuf(direct ? 0 : static_cast<std::size_t>(kdim) * pixels);
    std::vector<T> dcol(static_cast<std::size_t>(kdim) * pixels);
    for (int n = 0; n < xs.n; ++n) {
      const T* dy = self.grad.sample(n);
      if (bias && bias->requires_grad) {
        auto& gb = bias->grad_buffer();
        for (int co = 0; co < cout; ++co) {
          T s = 0;
          const T* row = dy + static_cast<std::size_t>(co) * pixels;
          for (int p = 0; p < pixels; ++p) s += row[p];
          gb[co] += s;
        }
      }
      if (weight->requires_grad) {
        const T* cols = x->value.sample(n);
        if (!direct) {
          im2col(x->value.sample(n), xs.c, xs.h, xs.w, k, stride, pad, oh, ow, colbuf.data());
          cols = colbuf.data();
        }
        simd::gemm_nt<T>(cout, kdim, pixels, dy, cols, weight->grad_buffer().data());
      }
      if (x->requires_grad) {
        T* gx = x->grad_buffer().sample(n);
        if (direct) {
          simd::gemm_tn<T>(kdim, pixels, cout, weight->value.data(), dy, gx);
        } else {
          std::fill(dcol.begin(), dcol.end(), T(0));
          simd::gemm_tn<T>(kdim, pixels, cout, weight->value.data(), dy, dcol.data());
          col2im(dcol.data(), xs.c, xs.h, xs.w, k, stride, pad, oh, ow, gx);
        }
      }
    }
  });
}

template <typename T>
Var<T> instance_norm(const Var<T>& x, T eps) {
  const Shape s = x->value.shape();
  const std::size_t plane = x->value.plane_size();
  const int planes = s.n * s.c;
  Tensor<T> out(s);
  std::vector<T> inv_std(static_cast<std::size_t>(planes));
  for (int p = 0; p < planes; ++p) {
    const T* src = x->value.data() + static_cast<std::size_t>(p) * plane;
    T* dst = out.data() + static_cast<std::size_t>(p) * plane;
    double mean = 0.0;
    for (std::size_t i = 0; i < plane; ++i) mean += src[i];
    mean /= static_cast<double>(plane);
    double var = 0.0;
    for (std::size_t i = 0; i < plane; ++i) {
      const double d = src[i] - mean;
      var += d * d;
    }
    var /= static_cast<double>(plane);
    const double inv = 1.0 / std::sqrt(var + static_cast<double>(eps));
    inv_std[static_cast<std::size_t>(p)] = static_cast<T>(inv);
    for (std::size_t i = 0; i < plane; ++i) dst[i] = static_cast<T>((src[i] - mean) * inv);
  }
  return make_result<T>(std::move(out), {x}, [x, inv_std, plane, planes](Node<T>& self) {
    auto& gx = x->grad_buffer();
    for (int p = 0; p < planes; ++p) {
      const std::size_t off = static_cast<std::size_t>(p) * plane;
      const T* dy = self.grad.data() + off;
      const T* y = self.value.data() + off;
      double mean_dy = 0.0;
      double mean_dy_y = 0.0;
      for (std::size_t i = 0; i < plane; ++i) {
        mean_dy += dy[i];
        mean_dy_y += static_cast<double>(dy[i]) * y[i];
      }
      mean_dy /= static_cast<double>(plane);
      mean_dy_y /= static_cast<double>(plane);
      const double inv = inv_std[static_cast<std::size_t>(p)];
      T* g = gx.data() + off;
      for (std::size_t i = 0; i < plane; ++i) g[i] += static_cast<T>(inv * (dy[i] - mean_dy - y[i] * mean_dy_y));
    }
  });
}

template <typename T>
Var<T> leaky_relu(const Var<T>& x, T slope) {
  return elementwise<T>(
      x, [slope](T v) { return v > T(0) ? v : slope * v; },
      [slope](T in, T) { return in > T(0) ? T(1) : slope; });
}

template <typename T>
Var<T> relu(const Var<T>& x) {
  return elementwise<T>(
      x, [](T v) { return v > T(0) ? v : T(0); }, [](T in, T) { return in > T(0) ? T(1) : T(0); });
}

template <typename T>
Var<T> tanh(const Var<T>& x) {
  return elementwise<T>(
      x, [](T v) { return std::tanh(v); }, [](T, T out) { return T(1) - out * out; });
}

template <typename T>
Var<T> sigmoid(const Var<T>& x) {
  return elementwise<T>(
      x, [](T v) { return T(1) / (T(1) + std::exp(-v)); }, [](T, T out) { return out * (T(1) - out); });
}

template <typename T>
Var<T> add(const Var<T>& a, const Var<T>& b) {
  require_same_shape(a->value, b->value, "add");
  Tensor<T> out(a->value.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a->value[i] + b->value[i];
  return make_result<T>(std::move(out), {a, b}, [a, b](Node<T>& self) {
    if (a->requires_grad) a->accumulate(self.grad);
    if (b->requires_grad) b->accumulate(self.grad);
  });
}

template <typename T>
Var<T> lerp(const Var<T>& a, const Var<T>& b, T alpha) {
  require_same_shape(a->value, b->value, "lerp");
  const T keep = T(1) - alpha;
  Tensor<T> out(a->value.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = keep * a->value[i] + alpha * b->value[i];
  return make_result<T>(std::move(out), {a, b}, [a, b, alpha, keep](Node<T>& self) {
    if (a->requires_grad) {
      auto& g = a->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += keep * self.grad[i];
    }
    if (b->requires_grad) {
      auto& g = b->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += alpha * self.grad[i];
    }
  });
}

template <typename T>
Var<T> concat_channels(const Var<T>& a, const Var<T>& b) {
  const Shape sa = a->value.shape();
  const Shape sb = b->value.shape();
  if (sa.n != sb.n || sa.h != sb.h || sa.w != sb.w)
    throw InvalidInput("concat_channels: " + sa.str() + " vs " + sb.str());
  Tensor<T> out(sa.n, sa.c + sb.c, sa.h, sa.w);
  for (int n = 0; n < sa.n; ++n) {
    std::copy_n(a->value.sample(n), a->value.sample_size(), out.sample(n));
    std::copy_n(b->value.sample(n), b->value.sample_size(), out.sample(n) + a->value.sample_size());
  }
  return make_result<T>(std::move(out), {a, b}, [a, b](Node<T>& self) {
    const std::size_t na = a->value.sample_size();
    const std::size_t nb = b->value.sample_size();
    for (int n = 0; n < a->value.n(); ++n) {
      const T* g = self.grad.sample(n);
      if (a->requires_grad) {
        T* ga = a->grad_buffer().sample(n);
        for (std::size_t i = 0; i < na; ++i) ga[i] += g[i];
      }
      if (b->requires_grad) {
        T* gb = b->grad_buffer().sample(n);
        for (std::size_t i = 0; i < nb; ++i) gb[i] += g[na + i];
      }
    }
  });
}

template <typename T>
Tensor<T> avg_pool(const Tensor<T>& x, int factor) {
  const Shape s = x.shape();
  if (factor < 1 || s.h % factor != 0 || s.w % factor != 0)
    throw InvalidInput("avg_pool: size " + s.str() + " not divisible by " + std::to_string(factor));
  const int oh = s.h / factor;
  const int ow = s.w / factor;
  Tensor<T> out(s.n, s.c, oh, ow);
  const double norm = 1.0 / (static_cast<double>(factor) * factor);
  for (int n = 0; n < s.n; ++n)
    for (int c = 0; c < s.c; ++c)
      for (int y = 0; y < oh; ++y)
        for (int xx = 0; xx < ow; ++xx) {
          double acc = 0.0;
          for (int dy = 0; dy < factor; ++dy)
            for (int dx = 0; dx < factor; ++dx) acc += x.at(n, c, y * factor + dy, xx * factor + dx);
          out.at(n, c, y, xx) = static_cast<T>(acc * norm);
        }
  return out;
}

template <typename T>
Var<T> avg_pool2(const Var<T>& x) {
  auto out = avg_pool(x->value, 2);
  return make_result<T>(std::move(out), {x}, [x](Node<T>& self) {
    auto& gx = x->grad_buffer();
    const Shape s = self.value.shape();
    for (int n = 0; n < s.n; ++n)
      for (int c = 0; c < s.c; ++c)
        for (int y = 0; y < s.h; ++y)
          for (int xx = 0; xx < s.w; ++xx) {
            const T g = self.grad.at(n, c, y, xx) * T(0.25);
            gx.at(n, c, 2 * y, 2 * xx) += g;
            gx.at(n, c, 2 * y, 2 * xx + 1) += g;
            gx.at(n, c, 2 * y + 1, 2 * xx) += g;
            gx.at(n, c, 2 * y + 1, 2 * xx + 1) += g;
          }
  });
}

template <typename T>
Var<T> max_pool2(const Var<T>& x) {
  const Shape s = x->value.shape();
  if (s.h % 2 != 0 || s.w % 2 != 0) throw InvalidInput("max_pool2: odd size " + s.str());
  Tensor<T> out(s.n, s.c, s.h / 2, s.w / 2);
  std::vector<std::size_t> argmax(out.size());
  std::size_t o = 0;
  for (int n = 0; n < s.n; ++n)
    for (int c = 0; c < s.c; ++c)
      for (int y = 0; y < s.h / 2; ++y)
        for (int xx = 0; xx < s.w / 2; ++xx, ++o) {
          std::size_t best = x->value.index(n, c, 2 * y, 2 * xx);
          for (int dy = 0; dy < 2; ++dy)
            for (int dx = 0; dx < 2; ++dx) {
              const std::size_t idx = x->value.index(n, c, 2 * y + dy, 2 * xx + dx);
              if (x->value[idx] > x->value[best]) best = idx;
            }
          argmax[o] = best;
          out[o] = x->value[best];
        }
  return make_result<T>(std::move(out), {x}, [x, argmax](Node<T>& self) {
    auto& gx = x->grad_buffer();
    for (std::size_t i = 0; i < argmax.size(); ++i) gx[argmax[i]] += self.grad[i];
  });
}

template <typename T>
Var<T> upsample_nearest2(const Var<T>& x) {
  const Shape s = x->value.shape();
  Tensor<T> out(s.n, s.c, s.h * 2, s.w * 2);
  for (int n = 0; n < s.n; ++n)
    for (int c = 0; c < s.c; ++c)
      for (int y = 0; y < 2 * s.h; ++y)
        for (int xx = 0; xx < 2 * s.w; ++xx) out.at(n, c, y, xx) = x->value.at(n, c, y / 2, xx / 2);
  return make_result<T>(std::move(out), {x}, [x](Node<T>& self) {
    auto& gx = x->grad_buffer();
    const Shape so = self.value.shape();
    for (int n = 0; n < so.n; ++n)
      for (int c = 0; c < so.c; ++c)
        for (int y = 0; y < so.h; ++y)
          for (int xx = 0; xx < so.w; ++xx) gx.at(n, c, y / 2, xx / 2) += self.grad.at(n, c, y, xx);
  });
}

template <typename T>
Tensor<T> bilinear(const Tensor<T>& x, int out_h, int out_w) {
  const Shape s = x.shape();
  const auto ty = linear_taps(s.h, out_h);
  const auto tx = linear_taps(s.w, out_w);
  Tensor<T> out(s.n, s.c, out_h, out_w);
  for (int n = 0; n < s.n; ++n)
    for (int c = 0; c < s.c; ++c)
      for (int y = 0; y < out_h; ++y) {
        const auto& a = ty[static_cast<std::size_t>(y)];
        for (int xx = 0; xx < out_w; ++xx) {
          const auto& b = tx[static_cast<std::size_t>(xx)];
          const double top = (1.0 - b.weight) * x.at(n, c, a.lo, b.lo) + b.weight * x.at(n, c, a.lo, b.hi);
          const double bot = (1.0 - b.weight) * x.at(n, c, a.hi, b.lo) + b.weight * x.at(n, c, a.hi, b.hi);
          out.at(n, c, y, xx) = static_cast<T>((1.0 - a.weight) * top + a.weight * bot);
        }
      }
  return out;
}

template <typename T>
Var<T> resize_bilinear(const Var<T>& x, int out_h, int out_w) {
  auto out = bilinear(x->value, out_h, out_w);
  return make_result<T>(std::move(out), {x}, [x, out_h, out_w](Node<T>& self) {
    const Shape s = x->value.shape();
    const auto ty = linear_taps(s.h, out_h);
    const auto tx = linear_taps(s.w, out_w);
    auto& gx = x->grad_buffer();
    for (int n = 0; n < s.n; ++n)
      for (int c = 0; c < s.c; ++c)
        for (int y = 0; y < out_h; ++y) {
          const auto& a = ty[static_cast<std::size_t>(y)];
          for (int xx = 0; xx < out_w; ++xx) {
            const auto& b = tx[static_cast<std::size_t>(xx)];
            const double g = self.grad.at(n, c, y, xx);
            gx.at(n, c, a.lo, b.lo) += static_cast<T>(g * (1.0 - a.weight) * (1.0 - b.weight));
            gx.at(n, c, a.lo, b.hi) += static_cast<T>(g * (1.0 - a.weight) * b.weight);
            gx.at(n, c, a.hi, b.lo) += static_cast<T>(g * a.weight * (1.0 - b.weight));
            gx.at(n, c, a.hi, b.hi) += static_cast<T>(g * a.weight * b.weight);
          }
        }
  });
}

template <typename T>
Var<T> dense(const Var<T>& x, const Var<T>& weight, const Var<T>& bias) {
  const int batch = x->value.n();
  const int in_dim = static_cast<int>(x->value.sample_size());
  const Shape ws = weight->value.shape();
  if (static_cast<int>(weight->value.sample_size()) != in_dim)
    throw InvalidInput("dense: weight " + ws.str() + " incompatible with input " + x->value.shape().str());
  const int out_dim = ws.n;
  Tensor<T> out(batch, out_dim, 1, 1);
  for (int n = 0; n < batch; ++n)
    for (int o = 0; o < out_dim; ++o)
      out.at(n, o, 0, 0) = (bias ? bias->value[o] : T(0)) +
                           simd::dot<T>(static_cast<std::size_t>(in_dim), weight->value.sample(o), x->value.sample(n));
  std::vector<Var<T>> inputs{x, weight};
  if (bias) inputs.push_back(bias);
  return make_result<T>(std::move(out), std::move(inputs), [=](Node<T>& self) {
    for (int n = 0; n < batch; ++n)
      for (int o = 0; o < out_dim; ++o) {
        const T g = self.grad.at(n, o, 0, 0);
        if (bias && bias->requires_grad) bias->grad_buffer()[o] += g;
        if (weight->requires_grad)
          simd::axpy<T>(static_cast<std::size_t>(in_dim), g, x->value.sample(n), weight->grad_buffer().sample(o));
        if (x->requires_grad)
          simd::axpy<T>(static_cast<std::size_t>(in_dim), g, weight->value.sample(o), x->grad_buffer().sample(n));
      }
  });
}

#define PROGFILL_INSTANTIATE_OPS(T)                                                   \
  template Var<T> conv2d<T>(const Var<T>&, const Var<T>&, const Var<T>&, int, int);   \
  template Var<T> instance_norm<T>(const Var<T>&, T);                                 \
  template Var<T> leaky_relu<T>(const Var<T>&, T);                                    \
  template Var<T> relu<T>(const Var<T>&);                                             \
  template Var<T> tanh<T>(const Var<T>&);                                             \
  template Var<T> sigmoid<T>(const Var<T>&);                                          \
  template Var<T> add<T>(const Var<T>&, const Var<T>&);                               \
  template Var<T> lerp<T>(const Var<T>&, const Var<T>&, T);                           \
  template Var<T> concat_channels<T>(const Var<T>&, const Var<T>&);                   \
  template Var<T> avg_pool2<T>(const Var<T>&);                                        \
  template Var<T> max_pool2<T>(const Var<T>&);                                        \
  template Var<T> upsample_nearest2<T>(const Var<T>&);                                \
  template Var<T> resize_bilinear<T>(const Var<T>&, int, int);                        \
  template Var<T> dense<T>(const Var<T>&, const Var<T>&, const Var<T>&);              \
  template Tensor<T> avg_pool<T>(const Tensor<T>&, int);                              \
  template Tensor<T> bilinear<T>(const Tensor<T>&, int, int);

PROGFILL_INSTANTIATE_OPS(float)
PROGFILL_INSTANTIATE_OPS(double)

#undef PROGFILL_INSTANTIATE_OPS

}  // namespace ops
}  // namespace progfill
