#include "progfill/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <set>

#include <json.hpp>

#include "progfill/ops.hpp"
#include "progfill/png_io.hpp"

namespace progfill {
namespace {

namespace fs = std::filesystem;

struct Row {
  std::string file;
  std::map<std::string, int> attrs;
};

std::vector<Row> read_manifest(const fs::path& manifest, std::vector<std::string>& offenders) {
  std::ifstream in(manifest);
  if (!in) throw IngestionError("cannot open manifest " + manifest.string(), {manifest.string()});
  std::vector<Row> rows;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = manifest.filename().string() + ":" + std::to_string(line_no);
    try {
      auto j = nlohmann::json::parse(line);
      Row row;
      row.file = j.at("file").get<std::string>();
      if (j.contains("attrs")) {
        for (const auto& [name, value] : j.at("attrs").items()) {
          if (!value.is_number_integer() || (value.get<int>() != 0 && value.get<int>() != 1)) {
            offenders.push_back(where + " (" + row.file + "): attribute " + name + " = " + value.dump() +
                                " is not 0 or 1");
            continue;
          }
          row.attrs[name] = value.get<int>();
        }
      }
      rows.push_back(std::move(row));
    } catch (const nlohmann::json::exception& e) {
      offenders.push_back(where + ": malformed row (" + e.what() + ")");
    }
  }
  return rows;
}

Dataset subset(const Dataset& all, const std::vector<std::size_t>& idx) {
  Dataset out;
  out.attribute_names = all.attribute_names;
  out.resolution = all.resolution;
  for (auto i : idx) out.records.push_back(all.records[i]);
  return out;
}

int reflect(int i, int n) {
  if (n == 1) return 0;
  const int period = 2 * (n - 1);
  i %= period;
  if (i < 0) i += period;
  return i > n - 1 ? period - i : i;
}

// Bilinear sample of plane `p` (size x size) at (x, y) with reflected
// indices outside the image.
float sample_reflect(const float* p, int size, double x, double y) {
  const double fx = std::floor(x);
  const double fy = std::floor(y);
  const double tx = x - fx;
  const double ty = y - fy;
  const int x0 = static_cast<int>(fx);
  const int y0 = static_cast<int>(fy);
  auto at = [&](int yy, int xx) { return static_cast<double>(p[reflect(yy, size) * size + reflect(xx, size)]); };
  double v = (1 - ty) * (1 - tx) * at(y0, x0);
  if (tx != 0.0) v += (1 - ty) * tx * at(y0, x0 + 1);
  if (ty != 0.0) v += ty * (1 - tx) * at(y0 + 1, x0);
  if (tx != 0.0 && ty != 0.0) v += ty * tx * at(y0 + 1, x0 + 1);
  return static_cast<float>(v);
}

void check_divisible(int side, int target, const char* what) {
  if (target < 1 || side % target != 0)
    throw InvalidInput(std::string(what) + ": side " + std::to_string(side) + " not divisible by " +
                       std::to_string(target));
}

}  // namespace

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(std::size_t n, std::uint64_t seed,
                                                                             double test_fraction) {
  if (!(test_fraction >= 0.0 && test_fraction < 1.0)) throw InvalidInput("test_fraction must be in [0, 1)");
  std::vector<std::size_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = i;
  Rng rng(seed);
  for (std::size_t i = n; i > 1; --i) std::swap(perm[i - 1], perm[rng.index(i)]);
  const auto n_test = static_cast<std::size_t>(std::llround(static_cast<double>(n) * test_fraction));
  std::vector<std::size_t> test(perm.begin(), perm.begin() + static_cast<long>(n_test));
  std::vector<std::size_t> train(perm.begin() + static_cast<long>(n_test), perm.end());
  std::sort(test.begin(), test.end());
  std::sort(train.begin(), train.end());
  return {train, test};
}

DatasetSplit load_dataset(const fs::path& dir, const fs::path& manifest, const LoadOptions& options) {
  if (!fs::is_directory(dir)) throw IngestionError("not a directory: " + dir.string(), {dir.string()});
  std::vector<std::string> offenders;
  std::vector<Row> rows;
  if (manifest.empty()) {
    std::vector<std::string> files;
    for (const auto& entry : fs::directory_iterator(dir))
      if (entry.is_regular_file() && entry.path().extension() == ".png") files.push_back(entry.path().filename().string());
    std::sort(files.begin(), files.end());
    for (auto& f : files) rows.push_back({std::move(f), {}});
  } else {
    rows = read_manifest(manifest, offenders);
  }

  Dataset all;
  all.attribute_names = options.attribute_names;
  if (all.attribute_names.empty() && !manifest.empty() && !rows.empty())
    for (const auto& [name, v] : rows.front().attrs) all.attribute_names.push_back(name);
  const std::set<std::string> known(all.attribute_names.begin(), all.attribute_names.end());

  for (const auto& row : rows) {
    std::vector<int> values;
    for (const auto& name : all.attribute_names) {
      auto it = row.attrs.find(name);
      if (it == row.attrs.end()) {
        offenders.push_back(row.file + ": missing attribute " + name);
        values.push_back(0);
      } else {
        values.push_back(it->second);
      }
    }
    for (const auto& [name, v] : row.attrs)
      if (!known.count(name)) offenders.push_back(row.file + ": unknown attribute " + name);

    const fs::path path = dir / row.file;
    if (!fs::is_regular_file(path)) {
      offenders.push_back(row.file + ": missing file");
      continue;
    }
    Image image;
    try {
      image = png::read_image(path);
    } catch (const ImageIoError& e) {
      offenders.push_back(row.file + ": " + e.what());
      continue;
    }
    if (image.height() != image.width()) {
      offenders.push_back(row.file + ": not square (" + std::to_string(image.width()) + "x" +
                          std::to_string(image.height()) + ")");
      continue;
    }
    if (all.resolution == 0) all.resolution = image.height();
    if (image.height() != all.resolution) {
      offenders.push_back(row.file + ": resolution " + std::to_string(image.height()) + " differs from " +
                          std::to_string(all.resolution));
      continue;
    }
    all.records.push_back({row.file, AttributeVector(std::move(values)), std::move(image)});
  }
  if (!offenders.empty())
    throw IngestionError("dataset ingestion failed with " + std::to_string(offenders.size()) + " problem(s)",
                         std::move(offenders));
  if (all.records.empty()) throw IngestionError("dataset is empty", {dir.string()});

  auto [train_idx, test_idx] = split_indices(all.size(), options.split_seed, options.test_fraction);
  return {subset(all, train_idx), subset(all, test_idx)};
}

Image downsample_image(const Image& image, int target_res) {
  if (image.height() != image.width()) throw InvalidInput("downsample_image: image is not square");
  check_divisible(image.height(), target_res, "downsample_image");
  return Image::from_tensor(ops::avg_pool(image.to_tensor(), image.height() / target_res));
}

Image blur_context_probe(const Image& image, int low_res) {
  const Image low = downsample_image(image, low_res);
  return Image::from_tensor(ops::bilinear(low.to_tensor(), image.height(), image.width()));
}

AugmentParams sample_augment_params(Rng& rng, double max_angle_degrees) {
  AugmentParams p;
  p.flip = rng.bernoulli(0.5);
  p.angle_degrees = rng.uniform(-max_angle_degrees, max_angle_degrees);
  return p;
}

std::pair<Image, MaskImage> augment_with(const Image& image, const MaskImage& mask, const AugmentParams& params) {
  const int size = image.height();
  if (image.width() != size || mask.height() != size || mask.width() != size)
    throw InvalidInput("augment: image and mask must be square and of equal size");

  // Work on float planes: channels of the image plus the mask as the last.
  const int planes = image.channels() + 1;
  const std::size_t area = static_cast<std::size_t>(size) * size;
  std::vector<float> src(planes * area);
  std::copy(image.data().begin(), image.data().end(), src.begin());
  for (std::size_t i = 0; i < area; ++i) src[image.channels() * area + i] = mask.data()[i] ? 1.0f : 0.0f;

  if (params.flip)
    for (int p = 0; p < planes; ++p)
      for (int y = 0; y < size; ++y) std::reverse(src.begin() + p * area + y * size, src.begin() + p * area + (y + 1) * size);

  std::vector<float> dst = src;
  if (params.angle_degrees != 0.0) {
    const double theta = params.angle_degrees * std::numbers::pi / 180.0;
    const double cs = std::cos(theta);
    const double sn = std::sin(theta);
    const double c = (size - 1) / 2.0;
    for (int y = 0; y < size; ++y)
      for (int x = 0; x < size; ++x) {
        // Inverse map: rotate the output coordinate back by -theta.
        const double dx = x - c;
        const double dy = y - c;
        const double sx = cs * dx + sn * dy + c;
        const double sy = -sn * dx + cs * dy + c;
        for (int p = 0; p < planes; ++p)
          dst[p * area + y * size + x] = sample_reflect(src.data() + p * area, size, sx, sy);
      }
  }

  Image out(image.channels(), size, size);
  std::copy(dst.begin(), dst.begin() + static_cast<long>(image.channels() * area), out.data().begin());
  MaskImage out_mask(size, size);
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) out_mask.set(y, x, dst[image.channels() * area + y * size + x] >= 0.5f);
  return {std::move(out), std::move(out_mask)};
}

std::pair<Image, MaskImage> augment(Rng& rng, const Image& image, const MaskImage& mask) {
  return augment_with(image, mask, sample_augment_params(rng));
}

}  // namespace progfill
