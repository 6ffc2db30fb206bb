#include "progfill/discriminator.hpp"

#include <cmath>

#include "progfill/ops.hpp"

namespace progfill {
namespace {

std::string level_name(const char* part, int r) { return std::string("d.") + part + "." + std::to_string(r); }

template <typename T>
void add_weights(ParamStore<T>& params, const std::string& prefix, Shape ws, double gain, Rng* rng) {
  const double fan_in = static_cast<double>(ws.c) * ws.h * ws.w;
  params.add(prefix + ".w", rng ? gaussian_tensor<T>(ws, std::sqrt(gain / fan_in), *rng) : Tensor<T>(ws));
  params.add(prefix + ".b", Tensor<T>(1, ws.n, 1, 1));
}

}  // namespace

template <typename T>
Discriminator<T>::Discriminator(const GeneratorConfig& config, int stage, Rng* rng) : config_(config), stage_(stage) {
  config_.validate();
  for (int r : config_.levels(stage)) add_level(r, rng);
}

template <typename T>
Discriminator<T>::Discriminator(const GeneratorConfig& config, int stage, Rng& rng)
    : Discriminator(config, stage, &rng) {}

template <typename T>
Discriminator<T> Discriminator<T>::zeros(const GeneratorConfig& config, int stage) {
  return Discriminator(config, stage, nullptr);
}

template <typename T>
void Discriminator<T>::add_level(int r, Rng* rng) {
  const int c = config_.channels_at(r);
  const int next = r == 4 ? c : config_.channels_at(r / 2);
  add_weights(params_, level_name("from", r), Shape{c, 3, 1, 1}, 2.0, rng);
  add_weights(params_, level_name("lvl", r) + ".conv1", Shape{c, c, 3, 3}, 2.0, rng);
  add_weights(params_, level_name("lvl", r) + ".conv2", Shape{next, c, 3, 3}, 2.0, rng);
  if (r == 4) {
    add_weights(params_, "d.cls", Shape{1, c, 4, 4}, 1.0, rng);
    if (config_.n_attributes > 0) add_weights(params_, "d.attr", Shape{config_.n_attributes, c, 4, 4}, 1.0, rng);
  }
}

template <typename T>
void Discriminator<T>::set_fade_alpha(double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw InvalidInput("fade_alpha must be in [0, 1]");
  fade_alpha_ = alpha;
}

template <typename T>
void Discriminator<T>::grow(Rng& rng) {
  if (stage_ >= config_.max_resolution)
    throw InvalidInput("discriminator already at max resolution " + std::to_string(config_.max_resolution));
  stage_ *= 2;
  add_level(stage_, &rng);
  fade_alpha_ = 0.0;
}

template <typename T>
Var<T> Discriminator<T>::from_rgb(int r, const Var<T>& image) const {
  const std::string p = level_name("from", r);
  return ops::leaky_relu(ops::conv2d(image, params_.get(p + ".w"), params_.get(p + ".b"), 1, 0),
                         static_cast<T>(config_.leaky_slope));
}

template <typename T>
Var<T> Discriminator<T>::block(const std::string& prefix, const Var<T>& x) const {
  auto y = ops::conv2d(x, params_.get(prefix + ".w"), params_.get(prefix + ".b"), 1, 1);
  return ops::leaky_relu(ops::instance_norm(y), static_cast<T>(config_.leaky_slope));
}

template <typename T>
DiscriminatorOutput<T> Discriminator<T>::forward(const Var<T>& image) const {
  const Shape s = image->value.shape();
  if (s.c != 3 || s.h != stage_ || s.w != stage_)
    throw InvalidInput("discriminator input " + s.str() + " does not match stage " + std::to_string(stage_));
  Var<T> h = from_rgb(stage_, image);
  for (int r = stage_; r > 4; r /= 2) {
    const std::string p = level_name("lvl", r);
    h = ops::avg_pool2(block(p + ".conv2", block(p + ".conv1", h)));
    if (fading() && r == stage_) {
      Var<T> old_path = from_rgb(r / 2, ops::avg_pool2(image));
      h = ops::lerp(old_path, h, static_cast<T>(fade_alpha_));
    }
  }
  h = block("d.lvl.4.conv2", block("d.lvl.4.conv1", h));
  DiscriminatorOutput<T> out;
  out.p_real = ops::sigmoid(ops::dense(h, params_.get("d.cls.w"), params_.get("d.cls.b")));
  if (config_.n_attributes > 0) out.a_hat = ops::sigmoid(ops::dense(h, params_.get("d.attr.w"), params_.get("d.attr.b")));
  return out;
}

template <typename T>
template <typename U>
Discriminator<U> Discriminator<T>::cast() const {
  Discriminator<U> out = Discriminator<U>::zeros(config_, stage_);
  out.params_ = params_.template cast<U>();
  out.fade_alpha_ = fade_alpha_;
  return out;
}

template class Discriminator<float>;
template class Discriminator<double>;
template Discriminator<double> Discriminator<float>::cast<double>() const;
template Discriminator<float> Discriminator<double>::cast<float>() const;

}  // namespace progfill
