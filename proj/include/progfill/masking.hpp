#pragma once

#include <vector>

#include "progfill/image.hpp"
#include "progfill/rng.hpp"
#include "progfill/tensor.hpp"

namespace progfill {

enum class MaskKind { random, center };

struct MaskSpec {
  MaskKind kind = MaskKind::random;
  double min_coverage = 0.10;
  double max_coverage = 0.30;
  int noise_res = 4;
  double threshold = 0.5;
  int max_resamples = 100;
  // Rectangle sides are drawn uniformly from this fraction of the image side.
  double min_rect_fraction = 0.3;
  double max_rect_fraction = 0.8;

  // Throws InvalidInput on an inconsistent spec.
  void validate() const;
};

// Random rectangle filled with bilinearly upsampled uniform noise, then
// thresholded; redrawn until coverage lands in `spec`'s band. Throws
// SamplingFailure once `max_resamples` draws have missed.
MaskImage sample_random_mask(Rng& rng, int height, int width, const MaskSpec& spec = {});

// Ones exactly on the centred (height/2) x (width/2) block.
MaskImage center_mask(int height, int width);

// Dispatches on spec.kind.
MaskImage sample_mask(Rng& rng, int height, int width, const MaskSpec& spec = {});

// Weights in [0, 1] concentrated on both sides of the mask boundary.
class BoundaryWeightMap {
 public:
  BoundaryWeightMap(int height, int width) : height_(height), width_(width), data_(static_cast<std::size_t>(height) * width) {}
  int height() const { return height_; }
  int width() const { return width_; }
  double at(int y, int x) const { return data_[static_cast<std::size_t>(y) * width_ + x]; }
  double& at(int y, int x) { return data_[static_cast<std::size_t>(y) * width_ + x]; }
  const std::vector<double>& data() const { return data_; }

 private:
  int height_;
  int width_;
  std::vector<double> data_;
};

// w = mean(M) * (1 - M) + mean(1 - M) * M with a kernel_size box filter and
// zero padding at the image border.
BoundaryWeightMap boundary_weights(const MaskImage& mask, int kernel_size = 7);

// image * (1 - M) + fill * M on every channel.
Image apply_mask(const Image& image, const MaskImage& mask, float fill = 0.0f);

// Batched form over N x C x H x W images and N x 1 x H x W masks.
Tensor<float> apply_mask(const Tensor<float>& images, const Tensor<float>& masks, float fill = 0.0f);

// Average-pools to target_res x target_res and re-binarizes at 0.5.
MaskImage downsample_mask(const MaskImage& mask, int target_res);

}  // namespace progfill
