#include "progfill/history_buffer.hpp"

#include <algorithm>

#include "progfill/errors.hpp"

namespace progfill {

HistoryBuffer::HistoryBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw InvalidInput("history buffer capacity must be positive");
}

void HistoryBuffer::push(Tensor<float> sample) {
  if (sample.n() != 1) throw InvalidInput("history buffer stores single samples");
  if (!items_.empty() && !(items_.front().shape() == sample.shape()))
    throw InvalidInput("history buffer sample " + sample.shape().str() + " vs stored " + items_.front().shape().str());
  if (full()) throw InvalidInput("history buffer is full");
  items_.push_back(std::move(sample));
}

Tensor<float> HistoryBuffer::exchange(std::size_t index, Tensor<float> sample) {
  if (index >= items_.size()) throw InvalidInput("history buffer index out of range");
  if (!(items_[index].shape() == sample.shape())) throw InvalidInput("history buffer sample shape changed");
  std::swap(items_[index], sample);
  return sample;
}

MixResult buffer_mix(HistoryBuffer& buffer, const Tensor<float>& fresh, Rng& rng, double swap_probability) {
  if (fresh.empty()) throw InvalidInput("buffer_mix: empty batch");
  MixResult out{Tensor<float>(fresh.shape()), std::vector<bool>(static_cast<std::size_t>(fresh.n()), false)};
  for (int n = 0; n < fresh.n(); ++n) {
    Tensor<float> sample = fresh.slice(n, 1);
    if (!buffer.full()) {
      buffer.push(sample);
    } else if (rng.bernoulli(swap_probability)) {
      sample = buffer.exchange(rng.index(buffer.size()), std::move(sample));
      out.swapped[static_cast<std::size_t>(n)] = true;
    }
    std::copy_n(sample.data(), sample.size(), out.batch.sample(n));
  }
  return out;
}

}  // namespace progfill
