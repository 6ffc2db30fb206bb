#include "progfill/feature_extractor.hpp"

#include <cmath>
#include <json.hpp>

#include "progfill/checkpoint.hpp"
#include "progfill/ops.hpp"

namespace progfill {
namespace {

const char* kind_name(int kind) {
  switch (kind) {
    case 0: return "conv";
    case 1: return "relu";
    default: return "maxpool";
  }
}

}  // namespace

template <typename T>
FeatureExtractor<T>::FeatureExtractor(std::vector<Layer> layers, ParamStore<T> params, std::string tag)
    : layers_(std::move(layers)), params_(std::move(params)), tag_(std::move(tag)) {
  params_.set_requires_grad(false);
  for (const auto& layer : layers_)
    if (layer.kind == LayerKind::conv) {
      const auto& w = params_.get(layer.name + ".w");
      if (w->value.h() != 3 || w->value.w() != 3) throw InvalidInput("feature extractor: conv " + layer.name + " is not 3x3");
      params_.get(layer.name + ".b");
      if (layer.stride < 1) throw InvalidInput("feature extractor: bad stride");
    }
}

template <typename T>
FeatureExtractor<T> FeatureExtractor<T>::random_default(std::uint64_t seed) {
  Rng rng(seed);
  ParamStore<T> params;
  std::vector<Layer> layers;
  const int widths[] = {3, 8, 8, 16, 16};
  for (int i = 0; i < 4; ++i) {
    const std::string name = "phi.conv" + std::to_string(i + 1);
    const int cin = widths[i];
    const int cout = widths[i + 1];
    params.add(name + ".w", gaussian_tensor<T>(Shape{cout, cin, 3, 3}, std::sqrt(2.0 / (9.0 * cin)), rng));
    params.add(name + ".b", Tensor<T>(1, cout, 1, 1));
    layers.push_back({LayerKind::conv, name, (i % 2 == 1) ? 2 : 1});
    layers.push_back({LayerKind::relu, "", 1});
  }
  return FeatureExtractor(std::move(layers), std::move(params), "random_conv4");
}

template <typename T>
int FeatureExtractor<T>::downsampling() const {
  int f = 1;
  for (const auto& layer : layers_) {
    if (layer.kind == LayerKind::conv) f *= layer.stride;
    if (layer.kind == LayerKind::maxpool) f *= 2;
  }
  return f;
}

template <typename T>
void FeatureExtractor<T>::check_resolution(int resolution) const {
  const int f = downsampling();
  if (resolution < f || resolution % f != 0)
    throw InvalidInput("feature extractor '" + tag_ + "' needs a resolution divisible by " + std::to_string(f) +
                       ", got " + std::to_string(resolution));
}

template <typename T>
Var<T> FeatureExtractor<T>::forward(const Var<T>& image) const {
  check_resolution(image->value.h());
  check_resolution(image->value.w());
  Var<T> h = image;
  for (const auto& layer : layers_) {
    switch (layer.kind) {
      case LayerKind::conv:
        h = ops::conv2d(h, params_.get(layer.name + ".w"), params_.get(layer.name + ".b"), layer.stride, 1);
        break;
      case LayerKind::relu: h = ops::relu(h); break;
      case LayerKind::maxpool: h = ops::max_pool2(h); break;
    }
  }
  return h;
}

template <typename T>
void FeatureExtractor<T>::save(const std::filesystem::path& path) const {
  Container c;
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& layer : layers_) {
    nlohmann::json j{{"kind", kind_name(static_cast<int>(layer.kind))}};
    if (layer.kind == LayerKind::conv) {
      j["name"] = layer.name;
      j["stride"] = layer.stride;
    }
    layers.push_back(j);
  }
  c.meta = {{"kind", "feature_extractor"}, {"layer_tag", tag_}, {"layers", layers}};
  for (const auto& [name, var] : params_.entries()) c.arrays.push_back({name, var->value.template cast<float>()});
  write_container(path, c);
}

template <typename T>
FeatureExtractor<T> FeatureExtractor<T>::load(const std::filesystem::path& path) {
  const Container c = read_container(path);
  try {
    if (c.meta.value("kind", "") != "feature_extractor")
      throw CheckpointError(path.string() + ": not a feature extractor file");
    std::vector<Layer> layers;
    for (const auto& j : c.meta.at("layers")) {
      const std::string kind = j.at("kind").get<std::string>();
      if (kind == "conv")
        layers.push_back({LayerKind::conv, j.at("name").get<std::string>(), j.value("stride", 1)});
      else if (kind == "relu")
        layers.push_back({LayerKind::relu, "", 1});
      else if (kind == "maxpool")
        layers.push_back({LayerKind::maxpool, "", 1});
      else
        throw CheckpointError(path.string() + ": unknown layer kind " + kind);
    }
    ParamStore<T> params;
    for (const auto& a : c.arrays) params.add(a.name, a.value.template cast<T>());
    return FeatureExtractor(std::move(layers), std::move(params), c.meta.value("layer_tag", "unnamed"));
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(path.string() + ": bad feature extractor manifest: " + e.what());
  } catch (const InvalidInput& e) {
    throw CheckpointError(path.string() + ": " + e.what());
  }
}

template <typename T>
template <typename U>
FeatureExtractor<U> FeatureExtractor<T>::cast() const {
  std::vector<typename FeatureExtractor<U>::Layer> layers;
  for (const auto& l : layers_)
    layers.push_back({static_cast<typename FeatureExtractor<U>::LayerKind>(static_cast<int>(l.kind)), l.name, l.stride});
  return FeatureExtractor<U>(std::move(layers), params_.template cast<U>(), tag_);
}

template class FeatureExtractor<float>;
template class FeatureExtractor<double>;
template FeatureExtractor<double> FeatureExtractor<float>::cast<double>() const;

}  // namespace progfill
