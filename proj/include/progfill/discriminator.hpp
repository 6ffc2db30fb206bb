#pragma once

#include "progfill/network_config.hpp"
#include "progfill/params.hpp"

namespace progfill {

template <typename T>
struct DiscriminatorOutput {
  Var<T> p_real;  // B x 1 x 1 x 1, in (0, 1)
  Var<T> a_hat;   // B x N x 1 x 1, in (0, 1); null when N = 0
};

// Shared convolutional backbone from the input resolution down to 4x4, then
// two dense sigmoid heads on the flattened 4x4 features: "d.cls" scores
// real vs. fake and "d.attr" predicts the attribute vector. While fading in
// stage S the backbone input blends from_{S/2}(pool(img)) with the pooled
// output of the new level.
template <typename T>
class Discriminator {
 public:
  Discriminator(const GeneratorConfig& config, int stage, Rng& rng);
  static Discriminator zeros(const GeneratorConfig& config, int stage);

  const GeneratorConfig& config() const { return config_; }
  int stage() const { return stage_; }
  double fade_alpha() const { return fade_alpha_; }
  void set_fade_alpha(double alpha);
  bool fading() const { return stage_ > 4 && fade_alpha_ < 1.0; }
  bool has_attribute_head() const { return config_.n_attributes > 0; }

  void grow(Rng& rng);

  // image: B x 3 x S x S.
  DiscriminatorOutput<T> forward(const Var<T>& image) const;

  ParamStore<T>& params() { return params_; }
  const ParamStore<T>& params() const { return params_; }

  template <typename U>
  Discriminator<U> cast() const;

 private:
  template <typename>
  friend class Discriminator;
  Discriminator(const GeneratorConfig& config, int stage, Rng* rng);

  void add_level(int r, Rng* rng);
  Var<T> from_rgb(int r, const Var<T>& image) const;
  Var<T> block(const std::string& prefix, const Var<T>& x) const;

  GeneratorConfig config_;
  int stage_;
  double fade_alpha_ = 1.0;
  ParamStore<T> params_;
};

}  // namespace progfill
