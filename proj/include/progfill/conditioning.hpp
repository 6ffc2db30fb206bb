#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "progfill/rng.hpp"
#include "progfill/tensor.hpp"

namespace progfill {

// Binary attribute vector. Empty means unconditional mode.
class AttributeVector {
 public:
  AttributeVector() = default;
  // Throws InvalidInput if any entry is not 0 or 1.
  explicit AttributeVector(std::vector<int> values);

  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }
  int operator[](std::size_t i) const { return values_[i]; }
  const std::vector<int>& values() const { return values_; }

  AttributeVector flipped(std::size_t index) const;
  std::size_t hamming(const AttributeVector& other) const;

  friend bool operator==(const AttributeVector&, const AttributeVector&) = default;

 private:
  std::vector<int> values_;
};

// Builds a vector in `names` order from a name -> value map. Unknown names
// and non-binary values throw InvalidInput; names absent from the map become
// 0 when `missing_is_zero`, otherwise they throw too.
AttributeVector attributes_from_map(std::span<const std::string> names, const std::map<std::string, int>& values,
                                    bool missing_is_zero);

// With probability 0.5 returns a_real; otherwise flips one uniformly chosen
// entry. Throws InvalidInput for an empty vector.
AttributeVector sample_fake_attributes(Rng& rng, const AttributeVector& a_real);

// Same rule with the draws supplied: p < 0.5 keeps a_real, otherwise entry
// `index` is flipped.
AttributeVector fake_attributes_from_draw(const AttributeVector& a_real, double p, std::size_t index);

// 1 x N x height x width, channel i constant at a[i].
Tensor<float> encode_attributes(const AttributeVector& a, int height, int width);

// Batched: B x N x height x width.
template <typename T = float>
Tensor<T> encode_attribute_batch(std::span<const AttributeVector> batch, int height, int width);

// B x N x 1 x 1 targets for the attribute head.
template <typename T = float>
Tensor<T> attribute_targets(std::span<const AttributeVector> batch);

}  // namespace progfill
