#pragma once

#include "progfill/conditioning.hpp"
#include "progfill/image.hpp"
#include "progfill/network_config.hpp"
#include "progfill/params.hpp"

namespace progfill {

// U-shaped completion network. The encoder maps (masked RGB, mask) down to a
// 4x4 bottleneck where the tiled attribute channels are appended; the
// mirrored decoder upsamples back, fed by skip connections from the encoder
// level of the same resolution.
//
// Every level r in {4, ..., stage} owns an input projection "g.in.r" and an
// output head "g.out.r", so a network grown to stage S carries the same
// parameter set as one built directly at S. While fading in stage S, both
// ends blend the new level with the S/2 path:
//   encoder: lerp(in_{S/2}(pool(x)), pool(enc_S(in_S(x))), alpha)
//   output:  lerp(bilinear_up(head_{S/2}), head_S, alpha)
template <typename T>
class Generator {
 public:
  Generator(const GeneratorConfig& config, int stage, Rng& rng);

  // Parameter shapes for `stage` with zero values, for checkpoint loading.
  static Generator zeros(const GeneratorConfig& config, int stage);

  const GeneratorConfig& config() const { return config_; }
  int stage() const { return stage_; }
  double fade_alpha() const { return fade_alpha_; }
  void set_fade_alpha(double alpha);
  bool fading() const { return stage_ > 4 && fade_alpha_ < 1.0; }

  // Doubles the stage, initializes the new level and resets alpha to 0.
  // Existing parameters are left untouched.
  void grow(Rng& rng);

  // input: B x 4 x S x S (masked RGB then mask), attrs: B x N x 1 x 1.
  // Returns B x 3 x S x S in [-1, 1].
  Var<T> forward(const Var<T>& input, const Tensor<T>& attrs) const;

  // When false, the skip path of every decoder level is replaced by zeros.
  // Only used to ablate skip connections in tests.
  void set_skips_enabled(bool on) { skips_enabled_ = on; }

  ParamStore<T>& params() { return params_; }
  const ParamStore<T>& params() const { return params_; }

  template <typename U>
  Generator<U> cast() const;

 private:
  template <typename>
  friend class Generator;
  Generator(const GeneratorConfig& config, int stage, Rng* rng);

  void add_level(int r, Rng* rng);
  Var<T> conv(const std::string& prefix, const Var<T>& x, int k) const;
  Var<T> block(const std::string& prefix, const Var<T>& x) const;
  Var<T> encoder_level(int r, const Var<T>& h) const;
  Var<T> decoder_level(int r, const Var<T>& below, const Var<T>& skip) const;
  Var<T> project_input(int r, const Var<T>& x) const;

  GeneratorConfig config_;
  int stage_;
  double fade_alpha_ = 1.0;
  bool skips_enabled_ = true;
  ParamStore<T> params_;
};

// Stacks observed images and masks into the 4-channel generator input.
template <typename T>
Tensor<T> generator_input(const Tensor<T>& observed, const Tensor<T>& masks);

// Single-image convenience over Generator<float>::forward without graph
// recording. Validates resolution and attribute length.
Image generator_forward(const Generator<float>& gen, const Image& observed, const MaskImage& mask,
                        const AttributeVector& attrs);

}  // namespace progfill
