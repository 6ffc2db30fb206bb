#pragma once

#include <cstddef>
#include <vector>

#include "progfill/rng.hpp"
#include "progfill/tensor.hpp"

namespace progfill {

// Pool of past generator outputs, each stored as a 1 x 3 x S x S sample.
class HistoryBuffer {
 public:
  explicit HistoryBuffer(std::size_t capacity = 50);

  std::size_t capacity() const { return capacity_; }
  std::size_t size() const { return items_.size(); }
  bool full() const { return items_.size() >= capacity_; }
  void clear() { items_.clear(); }

  const std::vector<Tensor<float>>& items() const { return items_; }
  void push(Tensor<float> sample);
  // Returns the old entry and stores `sample` in its place.
  Tensor<float> exchange(std::size_t index, Tensor<float> sample);

 private:
  std::size_t capacity_;
  std::vector<Tensor<float>> items_;
};

struct MixResult {
  Tensor<float> batch;
  std::vector<bool> swapped;  // per slot: output came from the buffer
};

// Per slot: while the buffer has room the fresh sample is stored and passed
// through. Once full, with probability `swap_probability` the slot is
// answered by a uniformly chosen buffered sample, which is replaced by the
// fresh one.
MixResult buffer_mix(HistoryBuffer& buffer, const Tensor<float>& fresh, Rng& rng, double swap_probability = 0.5);

}  // namespace progfill
