#include "progfill/conditioning.hpp"

#include <algorithm>

#include "progfill/errors.hpp"

namespace progfill {

AttributeVector::AttributeVector(std::vector<int> values) : values_(std::move(values)) {
  for (int v : values_)
    if (v != 0 && v != 1) throw InvalidInput("attribute value " + std::to_string(v) + " is not in {0,1}");
}

AttributeVector AttributeVector::flipped(std::size_t index) const {
  if (index >= values_.size()) throw InvalidInput("AttributeVector::flipped: index out of range");
  AttributeVector out = *this;
  out.values_[index] = 1 - out.values_[index];
  return out;
}

std::size_t AttributeVector::hamming(const AttributeVector& other) const {
  if (other.size() != size()) throw InvalidInput("AttributeVector::hamming: length mismatch");
  std::size_t d = 0;
  for (std::size_t i = 0; i < size(); ++i) d += values_[i] != other.values_[i] ? 1 : 0;
  return d;
}

AttributeVector attributes_from_map(std::span<const std::string> names, const std::map<std::string, int>& values,
                                    bool missing_is_zero) {
  for (const auto& [name, value] : values) {
    if (std::find(names.begin(), names.end(), name) == names.end())
      throw InvalidInput("unknown attribute name: " + name);
    if (value != 0 && value != 1)
      throw InvalidInput("attribute " + name + " = " + std::to_string(value) + " is not in {0,1}");
  }
  std::vector<int> out;
  out.reserve(names.size());
  for (const auto& name : names) {
    auto it = values.find(name);
    if (it == values.end()) {
      if (!missing_is_zero) throw InvalidInput("missing attribute: " + name);
      out.push_back(0);
    } else {
      out.push_back(it->second);
    }
  }
  return AttributeVector(std::move(out));
}

AttributeVector fake_attributes_from_draw(const AttributeVector& a_real, double p, std::size_t index) {
  if (a_real.empty()) throw InvalidInput("sample_fake_attributes: unconditional mode has no attributes");
  if (p < 0.5) return a_real;
  return a_real.flipped(index);
}

AttributeVector sample_fake_attributes(Rng& rng, const AttributeVector& a_real) {
  if (a_real.empty()) throw InvalidInput("sample_fake_attributes: unconditional mode has no attributes");
  const double p = rng.uniform();
  if (p < 0.5) return a_real;
  return a_real.flipped(static_cast<std::size_t>(rng.index(a_real.size())));
}

Tensor<float> encode_attributes(const AttributeVector& a, int height, int width) {
  if (height < 1 || width < 1) throw InvalidInput("encode_attributes: non-positive size");
  return encode_attribute_batch<float>(std::span<const AttributeVector>(&a, 1), height, width);
}

template <typename T>
Tensor<T> encode_attribute_batch(std::span<const AttributeVector> batch, int height, int width) {
  const int n_attr = batch.empty() ? 0 : static_cast<int>(batch.front().size());
  Tensor<T> out(static_cast<int>(batch.size()), n_attr, height, width);
  for (std::size_t b = 0; b < batch.size(); ++b) {
    if (static_cast<int>(batch[b].size()) != n_attr) throw InvalidInput("encode_attribute_batch: ragged batch");
    for (int i = 0; i < n_attr; ++i)
      std::fill_n(out.plane(static_cast<int>(b), i), out.plane_size(), static_cast<T>(batch[b][static_cast<std::size_t>(i)]));
  }
  return out;
}

template <typename T>
Tensor<T> attribute_targets(std::span<const AttributeVector> batch) {
  return encode_attribute_batch<T>(batch, 1, 1);
}

template Tensor<float> encode_attribute_batch<float>(std::span<const AttributeVector>, int, int);
template Tensor<double> encode_attribute_batch<double>(std::span<const AttributeVector>, int, int);
template Tensor<float> attribute_targets<float>(std::span<const AttributeVector>);
template Tensor<double> attribute_targets<double>(std::span<const AttributeVector>);

}  // namespace progfill
