#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "progfill/params.hpp"

namespace progfill {

// Frozen feature map phi used by the perceptual loss. A feature extractor is
// a plain sequence of 3x3 convolutions (with stride), ReLUs and 2x2 max
// pools. Its parameters never require gradients; only the input does.
template <typename T>
class FeatureExtractor {
 public:
  enum class LayerKind { conv, relu, maxpool };
  struct Layer {
    LayerKind kind = LayerKind::relu;
    std::string name;  // parameter prefix for conv layers
    int stride = 1;
  };

  // Four 3x3 convolutions, each followed by ReLU; the second and fourth have
  // stride 2. Weights are random Gaussians from `seed`.
  static FeatureExtractor random_default(std::uint64_t seed = 0x5eed);

  // Loads a layer manifest and weights written in the checkpoint container
  // format (see checkpoint.hpp), e.g. converted VGG-16 layers up to relu2_2.
  static FeatureExtractor load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  FeatureExtractor(std::vector<Layer> layers, ParamStore<T> params, std::string tag);

  Var<T> forward(const Var<T>& image) const;

  // Throws InvalidInput when `resolution` cannot pass through the layers.
  void check_resolution(int resolution) const;
  int downsampling() const;

  const std::string& layer_tag() const { return tag_; }
  const std::vector<Layer>& layers() const { return layers_; }
  const ParamStore<T>& params() const { return params_; }

  template <typename U>
  FeatureExtractor<U> cast() const;

 private:
  std::vector<Layer> layers_;
  ParamStore<T> params_;
  std::string tag_;
};

}  // namespace progfill
