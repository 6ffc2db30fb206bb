#include "progfill/image.hpp"

#include <algorithm>
#include <numeric>

namespace progfill {

Image::Image(int channels, int height, int width, float fill)
    : channels_(channels),
      height_(height),
      width_(width),
      data_(static_cast<std::size_t>(channels) * height * width, fill) {
  if (channels <= 0 || height <= 0 || width <= 0) throw InvalidInput("Image: non-positive dimensions");
}

Tensor<float> Image::to_tensor() const {
  Tensor<float> t(1, channels_, height_, width_);
  std::copy(data_.begin(), data_.end(), t.data());
  return t;
}

Image Image::from_tensor(const Tensor<float>& t, int sample) {
  Image img(t.c(), t.h(), t.w());
  std::copy_n(t.sample(sample), t.sample_size(), img.data_.data());
  return img;
}

MaskImage::MaskImage(int height, int width, bool fill)
    : height_(height), width_(width), data_(static_cast<std::size_t>(height) * width, fill ? 1 : 0) {
  if (height <= 0 || width <= 0) throw InvalidInput("MaskImage: non-positive dimensions");
}

std::size_t MaskImage::count() const {
  return static_cast<std::size_t>(std::count(data_.begin(), data_.end(), std::uint8_t{1}));
}

double MaskImage::coverage() const { return static_cast<double>(count()) / static_cast<double>(data_.size()); }

MaskImage MaskImage::complement() const {
  MaskImage out = *this;
  for (auto& v : out.data_) v = v ? 0 : 1;
  return out;
}

Tensor<float> MaskImage::to_tensor() const {
  Tensor<float> t(1, 1, height_, width_);
  std::transform(data_.begin(), data_.end(), t.data(), [](std::uint8_t v) { return v ? 1.0f : 0.0f; });
  return t;
}

Tensor<float> stack_images(std::span<const Image> images) {
  if (images.empty()) throw InvalidInput("stack_images: empty batch");
  const Image& first = images.front();
  Tensor<float> t(static_cast<int>(images.size()), first.channels(), first.height(), first.width());
  for (std::size_t i = 0; i < images.size(); ++i) {
    const Image& img = images[i];
    if (img.channels() != first.channels() || img.height() != first.height() || img.width() != first.width())
      throw InvalidInput("stack_images: images differ in shape");
    std::copy(img.data().begin(), img.data().end(), t.sample(static_cast<int>(i)));
  }
  return t;
}

Tensor<float> stack_masks(std::span<const MaskImage> masks) {
  if (masks.empty()) throw InvalidInput("stack_masks: empty batch");
  const MaskImage& first = masks.front();
  Tensor<float> t(static_cast<int>(masks.size()), 1, first.height(), first.width());
  for (std::size_t i = 0; i < masks.size(); ++i) {
    if (masks[i].height() != first.height() || masks[i].width() != first.width())
      throw InvalidInput("stack_masks: masks differ in shape");
    std::transform(masks[i].data().begin(), masks[i].data().end(), t.sample(static_cast<int>(i)),
                   [](std::uint8_t v) { return v ? 1.0f : 0.0f; });
  }
  return t;
}

}  // namespace progfill
