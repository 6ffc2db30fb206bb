#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "progfill/tensor.hpp"

namespace progfill {

// Planar C x H x W image with values nominally in [-1, 1].
class Image {
 public:
  Image() = default;
  Image(int channels, int height, int width, float fill = 0.0f);

  int channels() const { return channels_; }
  int height() const { return height_; }
  int width() const { return width_; }
  bool empty() const { return data_.empty(); }

  float& at(int c, int y, int x) { return data_[index(c, y, x)]; }
  float at(int c, int y, int x) const { return data_[index(c, y, x)]; }
  std::span<float> data() { return data_; }
  std::span<const float> data() const { return data_; }

  // 1 x C x H x W.
  Tensor<float> to_tensor() const;
  static Image from_tensor(const Tensor<float>& t, int sample = 0);

  friend bool operator==(const Image&, const Image&) = default;

 private:
  std::size_t index(int c, int y, int x) const {
    return (static_cast<std::size_t>(c) * height_ + y) * width_ + x;
  }

  int channels_ = 0;
  int height_ = 0;
  int width_ = 0;
  std::vector<float> data_;
};

// Binary map: 1 marks the target region to complete, 0 the context.
class MaskImage {
 public:
  MaskImage() = default;
  MaskImage(int height, int width, bool fill = false);

  int height() const { return height_; }
  int width() const { return width_; }

  bool at(int y, int x) const { return data_[static_cast<std::size_t>(y) * width_ + x] != 0; }
  void set(int y, int x, bool v) { data_[static_cast<std::size_t>(y) * width_ + x] = v ? 1 : 0; }
  std::span<const std::uint8_t> data() const { return data_; }

  std::size_t count() const;
  double coverage() const;
  MaskImage complement() const;

  // 1 x 1 x H x W of {0, 1}.
  Tensor<float> to_tensor() const;

  friend bool operator==(const MaskImage&, const MaskImage&) = default;

 private:
  int height_ = 0;
  int width_ = 0;
  std::vector<std::uint8_t> data_;
};

// N x C x H x W from same-sized images.
Tensor<float> stack_images(std::span<const Image> images);
Tensor<float> stack_masks(std::span<const MaskImage> masks);

}  // namespace progfill
