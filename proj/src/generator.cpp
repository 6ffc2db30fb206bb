#include "progfill/generator.hpp"

#include <cmath>
#include <map>

#include "progfill/ops.hpp"

namespace progfill {
namespace {

std::string level_name(const char* part, int r) { return std::string("g.") + part + "." + std::to_string(r); }

template <typename T>
void add_conv(ParamStore<T>& params, const std::string& prefix, int cin, int cout, int k, double gain, Rng* rng) {
  const Shape ws{cout, cin, k, k};
  const double stddev = std::sqrt(gain / (static_cast<double>(cin) * k * k));
  params.add(prefix + ".w", rng ? gaussian_tensor<T>(ws, stddev, *rng) : Tensor<T>(ws));
  params.add(prefix + ".b", Tensor<T>(1, cout, 1, 1));
}

}  // namespace

template <typename T>
Generator<T>::Generator(const GeneratorConfig& config, int stage, Rng* rng) : config_(config), stage_(stage) {
  config_.validate();
  for (int r : config_.levels(stage)) add_level(r, rng);
}

template <typename T>
Generator<T>::Generator(const GeneratorConfig& config, int stage, Rng& rng) : Generator(config, stage, &rng) {}

template <typename T>
Generator<T> Generator<T>::zeros(const GeneratorConfig& config, int stage) {
  return Generator(config, stage, nullptr);
}

template <typename T>
void Generator<T>::add_level(int r, Rng* rng) {
  const int c = config_.channels_at(r);
  const int n_attr = config_.n_attributes;
  add_conv(params_, level_name("in", r), 4, c, 1, 2.0, rng);
  if (r == 4) {
    add_conv(params_, level_name("enc", r) + ".conv1", c, c, 3, 2.0, rng);
    add_conv(params_, level_name("enc", r) + ".conv2", c, c, 3, 2.0, rng);
    add_conv(params_, level_name("dec", r) + ".conv1", c + n_attr, c, 3, 2.0, rng);
    add_conv(params_, level_name("dec", r) + ".conv2", c, c, 3, 2.0, rng);
  } else {
    const int below = config_.channels_at(r / 2);
    add_conv(params_, level_name("enc", r) + ".conv1", c, c, 3, 2.0, rng);
    add_conv(params_, level_name("enc", r) + ".conv2", c, below, 3, 2.0, rng);
    if (config_.skip_variant == SkipVariant::concat) {
      add_conv(params_, level_name("dec", r) + ".conv1", 2 * below, c, 3, 2.0, rng);
    } else {
      add_conv(params_, level_name("dec", r) + ".conv1", below, c, 3, 2.0, rng);
      add_conv(params_, level_name("dec", r) + ".skip", below, c, 3, 2.0, rng);
    }
    add_conv(params_, level_name("dec", r) + ".conv2", c, c, 3, 2.0, rng);
  }
  add_conv(params_, level_name("out", r), c, 3, 1, 1.0, rng);
}

template <typename T>
void Generator<T>::set_fade_alpha(double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw InvalidInput("fade_alpha must be in [0, 1]");
  fade_alpha_ = alpha;
}

template <typename T>
void Generator<T>::grow(Rng& rng) {
  if (stage_ >= config_.max_resolution)
    throw InvalidInput("generator already at max resolution " + std::to_string(config_.max_resolution));
  stage_ *= 2;
  add_level(stage_, &rng);
  fade_alpha_ = 0.0;
}

template <typename T>
Var<T> Generator<T>::conv(const std::string& prefix, const Var<T>& x, int k) const {
  return ops::conv2d(x, params_.get(prefix + ".w"), params_.get(prefix + ".b"), 1, k / 2);
}

template <typename T>
Var<T> Generator<T>::block(const std::string& prefix, const Var<T>& x) const {
  return ops::leaky_relu(ops::instance_norm(conv(prefix, x, 3)), static_cast<T>(config_.leaky_slope));
}

template <typename T>
Var<T> Generator<T>::project_input(int r, const Var<T>& x) const {
  return ops::leaky_relu(conv(level_name("in", r), x, 1), static_cast<T>(config_.leaky_slope));
}

template <typename T>
Var<T> Generator<T>::encoder_level(int r, const Var<T>& h) const {
  const std::string p = level_name("enc", r);
  Var<T> h1 = block(p + ".conv1", h);
  if (config_.skip_variant == SkipVariant::residual) h1 = ops::add(h, h1);
  return block(p + ".conv2", h1);
}

template <typename T>
Var<T> Generator<T>::decoder_level(int r, const Var<T>& below, const Var<T>& skip) const {
  const std::string p = level_name("dec", r);
  Var<T> up = ops::upsample_nearest2(below);
  Var<T> s = skips_enabled_ ? skip : constant(Tensor<T>(skip->value.shape()));
  Var<T> h;
  if (config_.skip_variant == SkipVariant::concat) {
    h = block(p + ".conv1", ops::concat_channels(up, s));
  } else {
    h = ops::add(block(p + ".conv1", up), block(p + ".skip", s));
  }
  return block(p + ".conv2", h);
}

template <typename T>
Var<T> Generator<T>::forward(const Var<T>& input, const Tensor<T>& attrs) const {
  const Shape s = input->value.shape();
  if (s.c != 4 || s.h != stage_ || s.w != stage_)
    throw InvalidInput("generator input " + s.str() + " does not match stage " + std::to_string(stage_));
  if (attrs.n() != s.n || attrs.c() != config_.n_attributes)
    throw InvalidInput("generator attributes " + attrs.shape().str() + " do not match batch of " +
                       std::to_string(s.n) + " x " + std::to_string(config_.n_attributes));
  const T alpha = static_cast<T>(fade_alpha_);
  const bool blend = fading();

  std::map<int, Var<T>> skips;
  Var<T> h = project_input(stage_, input);
  Var<T> bottleneck;
  for (int r = stage_; r >= 4; r /= 2) {
    if (blend && r == stage_ / 2) {
      Var<T> old_path = project_input(r, constant(ops::avg_pool(input->value, 2)));
      h = ops::lerp(old_path, h, alpha);
    }
    if (r > 4) {
      Var<T> e = encoder_level(r, h);
      skips[r] = e;
      h = ops::avg_pool2(e);
    } else {
      bottleneck = encoder_level(4, h);
    }
  }

  Var<T> d = bottleneck;
  if (config_.n_attributes > 0) {
    Tensor<T> tiled(s.n, config_.n_attributes, 4, 4);
    for (int n = 0; n < s.n; ++n)
      for (int a = 0; a < config_.n_attributes; ++a) std::fill_n(tiled.plane(n, a), 16, attrs.at(n, a, 0, 0));
    d = ops::concat_channels(d, constant(std::move(tiled)));
  }
  {
    const std::string p = level_name("dec", 4);
    d = block(p + ".conv2", block(p + ".conv1", d));
  }

  Var<T> previous_head;
  for (int r = 8; r <= stage_; r *= 2) {
    if (blend && r == stage_) previous_head = ops::tanh(conv(level_name("out", r / 2), d, 1));
    d = decoder_level(r, d, skips.at(r));
  }
  Var<T> out = ops::tanh(conv(level_name("out", stage_), d, 1));
  if (blend) out = ops::lerp(ops::resize_bilinear(previous_head, stage_, stage_), out, alpha);
  return out;
}

template <typename T>
template <typename U>
Generator<U> Generator<T>::cast() const {
  Generator<U> out = Generator<U>::zeros(config_, stage_);
  out.params_ = params_.template cast<U>();
  out.fade_alpha_ = fade_alpha_;
  out.skips_enabled_ = skips_enabled_;
  return out;
}

template <typename T>
Tensor<T> generator_input(const Tensor<T>& observed, const Tensor<T>& masks) {
  if (observed.c() != 3 || masks.c() != 1 || observed.n() != masks.n() || observed.h() != masks.h() ||
      observed.w() != masks.w())
    throw InvalidInput("generator_input: images " + observed.shape().str() + " vs masks " + masks.shape().str());
  Tensor<T> out(observed.n(), 4, observed.h(), observed.w());
  for (int n = 0; n < observed.n(); ++n) {
    std::copy_n(observed.sample(n), observed.sample_size(), out.sample(n));
    std::copy_n(masks.sample(n), masks.sample_size(), out.sample(n) + observed.sample_size());
  }
  return out;
}

Image generator_forward(const Generator<float>& gen, const Image& observed, const MaskImage& mask,
                        const AttributeVector& attrs) {
  if (observed.channels() != 3 || observed.height() != gen.stage() || observed.width() != gen.stage())
    throw InvalidInput("observed image must be 3 x " + std::to_string(gen.stage()) + " x " + std::to_string(gen.stage()));
  if (mask.height() != gen.stage() || mask.width() != gen.stage())
    throw InvalidInput("mask must be " + std::to_string(gen.stage()) + " x " + std::to_string(gen.stage()));
  if (static_cast<int>(attrs.size()) != gen.config().n_attributes)
    throw InvalidInput("expected " + std::to_string(gen.config().n_attributes) + " attributes, got " +
                       std::to_string(attrs.size()));
  NoGradGuard no_grad;
  auto input = constant(generator_input(observed.to_tensor(), mask.to_tensor()));
  auto out = gen.forward(input, attribute_targets<float>(std::span<const AttributeVector>(&attrs, 1)));
  return Image::from_tensor(out->value);
}

template class Generator<float>;
template class Generator<double>;
template Generator<double> Generator<float>::cast<double>() const;
template Generator<float> Generator<double>::cast<float>() const;
template Generator<float> Generator<float>::cast<float>() const;
template Tensor<float> generator_input<float>(const Tensor<float>&, const Tensor<float>&);
template Tensor<double> generator_input<double>(const Tensor<double>&, const Tensor<double>&);

}  // namespace progfill
