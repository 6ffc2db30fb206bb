#include "progfill/masking.hpp"

#include <cmath>
#include <string>

#include "progfill/resample.hpp"

namespace progfill {

void MaskSpec::validate() const {
  if (!(min_coverage > 0.0 && min_coverage <= max_coverage && max_coverage < 1.0))
    throw InvalidInput("MaskSpec: need 0 < min_coverage <= max_coverage < 1");
  if (noise_res < 2) throw InvalidInput("MaskSpec: noise_res must be >= 2");
  if (max_resamples < 1) throw InvalidInput("MaskSpec: max_resamples must be >= 1");
  if (!(min_rect_fraction > 0.0 && min_rect_fraction <= max_rect_fraction && max_rect_fraction <= 1.0))
    throw InvalidInput("MaskSpec: rectangle fractions must satisfy 0 < min <= max <= 1");
}

namespace {

int side_in_range(Rng& rng, int side, double lo_frac, double hi_frac) {
  const int lo = std::max(1, static_cast<int>(std::ceil(lo_frac * side)));
  const int hi = std::max(lo, std::min(side, static_cast<int>(std::floor(hi_frac * side))));
  return rng.integer(lo, hi);
}

MaskImage draw_noise_rectangle(Rng& rng, int height, int width, const MaskSpec& spec) {
  const int rh = side_in_range(rng, height, spec.min_rect_fraction, spec.max_rect_fraction);
  const int rw = side_in_range(rng, width, spec.min_rect_fraction, spec.max_rect_fraction);
  const int top = rng.integer(0, height - rh);
  const int left = rng.integer(0, width - rw);

  const int nr = spec.noise_res;
  std::vector<double> noise(static_cast<std::size_t>(nr) * nr);
  for (auto& v : noise) v = rng.uniform();

  const auto ty = linear_taps(nr, rh);
  const auto tx = linear_taps(nr, rw);
  auto at = [&](int y, int x) { return noise[static_cast<std::size_t>(y) * nr + x]; };

  MaskImage mask(height, width);
  for (int y = 0; y < rh; ++y) {
    const auto& a = ty[static_cast<std::size_t>(y)];
    for (int x = 0; x < rw; ++x) {
      const auto& b = tx[static_cast<std::size_t>(x)];
      const double top_row = (1.0 - b.weight) * at(a.lo, b.lo) + b.weight * at(a.lo, b.hi);
      const double bottom_row = (1.0 - b.weight) * at(a.hi, b.lo) + b.weight * at(a.hi, b.hi);
      const double v = (1.0 - a.weight) * top_row + a.weight * bottom_row;
      if (v > spec.threshold) mask.set(top + y, left + x, true);
    }
  }
  return mask;
}

}  // namespace

MaskImage sample_random_mask(Rng& rng, int height, int width, const MaskSpec& spec) {
  spec.validate();
  if (height < spec.noise_res || width < spec.noise_res)
    throw InvalidInput("sample_random_mask: image smaller than noise resolution");
  for (int attempt = 0; attempt < spec.max_resamples; ++attempt) {
    MaskImage mask = draw_noise_rectangle(rng, height, width, spec);
    const double cov = mask.coverage();
    if (cov >= spec.min_coverage && cov <= spec.max_coverage) return mask;
  }
  throw SamplingFailure("sample_random_mask: no mask with coverage in [" + std::to_string(spec.min_coverage) + ", " +
                        std::to_string(spec.max_coverage) + "] after " + std::to_string(spec.max_resamples) +
                        " draws");
}

MaskImage center_mask(int height, int width) {
  if (height <= 0 || width <= 0 || height % 2 != 0 || width % 2 != 0)
    throw InvalidInput("center_mask: dimensions must be positive and even");
  MaskImage mask(height, width);
  for (int y = height / 4; y < height / 4 + height / 2; ++y)
    for (int x = width / 4; x < width / 4 + width / 2; ++x) mask.set(y, x, true);
  return mask;
}

MaskImage sample_mask(Rng& rng, int height, int width, const MaskSpec& spec) {
  return spec.kind == MaskKind::center ? center_mask(height, width) : sample_random_mask(rng, height, width, spec);
}

BoundaryWeightMap boundary_weights(const MaskImage& mask, int kernel_size) {
  if (kernel_size < 3 || kernel_size % 2 == 0) throw InvalidInput("boundary_weights: kernel_size must be odd and >= 3");
  const int h = mask.height();
  const int w = mask.width();
  const int r = kernel_size / 2;
  // Box sums via an integral image over M; the sum over 1 - M inside the
  // window is (in-image window area) - sum(M), padding contributing zero.
  std::vector<long> integral(static_cast<std::size_t>(h + 1) * (w + 1), 0);
  auto I = [&](int y, int x) -> long& { return integral[static_cast<std::size_t>(y) * (w + 1) + x]; };
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) I(y + 1, x + 1) = I(y, x + 1) + I(y + 1, x) - I(y, x) + (mask.at(y, x) ? 1 : 0);

  const double area = static_cast<double>(kernel_size) * kernel_size;
  BoundaryWeightMap out(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const int y0 = std::max(0, y - r);
      const int y1 = std::min(h, y + r + 1);
      const int x0 = std::max(0, x - r);
      const int x1 = std::min(w, x + r + 1);
      const long ones = I(y1, x1) - I(y0, x1) - I(y1, x0) + I(y0, x0);
      const long inside = static_cast<long>(y1 - y0) * (x1 - x0);
      out.at(y, x) = mask.at(y, x) ? static_cast<double>(inside - ones) / area : static_cast<double>(ones) / area;
    }
  return out;
}

Image apply_mask(const Image& image, const MaskImage& mask, float fill) {
  if (image.height() != mask.height() || image.width() != mask.width())
    throw InvalidInput("apply_mask: image and mask sizes differ");
  Image out = image;
  for (int c = 0; c < image.channels(); ++c)
    for (int y = 0; y < image.height(); ++y)
      for (int x = 0; x < image.width(); ++x)
        if (mask.at(y, x)) out.at(c, y, x) = fill;
  return out;
}

Tensor<float> apply_mask(const Tensor<float>& images, const Tensor<float>& masks, float fill) {
  if (masks.n() != images.n() || masks.c() != 1 || masks.h() != images.h() || masks.w() != images.w())
    throw InvalidInput("apply_mask: image batch " + images.shape().str() + " vs mask batch " + masks.shape().str());
  Tensor<float> out = images;
  const std::size_t plane = images.plane_size();
  for (int n = 0; n < images.n(); ++n) {
    const float* m = masks.sample(n);
    for (int c = 0; c < images.c(); ++c) {
      float* p = out.plane(n, c);
      for (std::size_t i = 0; i < plane; ++i) p[i] = p[i] * (1.0f - m[i]) + fill * m[i];
    }
  }
  return out;
}

MaskImage downsample_mask(const MaskImage& mask, int target_res) {
  if (target_res < 4) throw InvalidInput("downsample_mask: target_res must be >= 4");
  if (mask.height() != mask.width() || mask.height() % target_res != 0)
    throw InvalidInput("downsample_mask: mask side " + std::to_string(mask.height()) + " not divisible by " +
                       std::to_string(target_res));
  const int f = mask.height() / target_res;
  const int block = f * f;
  MaskImage out(target_res, target_res);
  for (int y = 0; y < target_res; ++y)
    for (int x = 0; x < target_res; ++x) {
      int ones = 0;
      for (int dy = 0; dy < f; ++dy)
        for (int dx = 0; dx < f; ++dx) ones += mask.at(y * f + dy, x * f + dx) ? 1 : 0;
      out.set(y, x, 2 * ones >= block);
    }
  return out;
}

}  // namespace progfill
