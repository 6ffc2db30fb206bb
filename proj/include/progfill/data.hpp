#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "progfill/conditioning.hpp"
#include "progfill/image.hpp"
#include "progfill/rng.hpp"

namespace progfill {

struct Record {
  std::string file;  // relative to the dataset directory
  AttributeVector attributes;
  Image image;  // decoded, values in [-1, 1]
};

struct Dataset {
  std::vector<std::string> attribute_names;
  std::vector<Record> records;
  int resolution = 0;

  std::size_t size() const { return records.size(); }
  bool empty() const { return records.empty(); }
};

struct DatasetSplit {
  Dataset train;
  Dataset test;
};

struct LoadOptions {
  std::uint64_t split_seed = 0;
  double test_fraction = 0.1;
  // Attribute order. Empty takes the sorted names of the first manifest row.
  std::vector<std::string> attribute_names;
};

// Reads a JSON-lines manifest of {"file": ..., "attrs": {...}} rows relative
// to `dir`. An empty manifest path loads every *.png in `dir` (sorted) with
// no attributes. All problems are gathered into one IngestionError.
DatasetSplit load_dataset(const std::filesystem::path& dir, const std::filesystem::path& manifest,
                          const LoadOptions& options = {});

// Seeded permutation split; the first llround(n * test_fraction) indices of
// the permutation form the test set. Both lists are returned sorted.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(std::size_t n, std::uint64_t seed,
                                                                             double test_fraction);

// Non-overlapping block means.
Image downsample_image(const Image& image, int target_res);

// Block-mean down to low_res, then bilinear back to the input size.
Image blur_context_probe(const Image& image, int low_res = 32);

struct AugmentParams {
  bool flip = false;
  double angle_degrees = 0.0;
};

AugmentParams sample_augment_params(Rng& rng, double max_angle_degrees = 30.0);

// Horizontal flip (when requested) followed by rotation about the image
// centre with bilinear sampling and reflection at the borders. The mask
// follows the same map and is re-binarized at 0.5.
std::pair<Image, MaskImage> augment_with(const Image& image, const MaskImage& mask, const AugmentParams& params);

std::pair<Image, MaskImage> augment(Rng& rng, const Image& image, const MaskImage& mask);

}  // namespace progfill
