#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>

#include <json.hpp>

#include "progfill/data.hpp"
#include "progfill/errors.hpp"
#include "progfill/png_io.hpp"
#include "support/reference.hpp"
#include "support/synthetic.hpp"

using namespace progfill;
using namespace progfill::testing;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& tag) {
  auto d = fs::temp_directory_path() / ("progfill_data_" + tag + "_" + std::to_string(::getpid()));
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

Map image_map(const Image& img) { return map_from(img.to_tensor().cast<double>(), 0); }

Image random_image(int size, Rng& rng) {
  Image img(3, size, size);
  for (auto& v : img.data()) v = static_cast<float>(rng.uniform(-1, 1));
  return img;
}

// Writes n 8x8 PNGs and a manifest with attributes {Male, Smiling}.
fs::path write_faces(const fs::path& dir, int n) {
  std::ofstream m(dir / "attrs.jsonl");
  for (int i = 0; i < n; ++i) {
    const std::string name = "img" + std::to_string(i) + ".png";
    png::write_image(dir / name, blob_image(static_cast<std::uint64_t>(i), 8));
    m << nlohmann::json{{"file", name}, {"attrs", {{"Smiling", i % 2}, {"Male", (i / 2) % 2}}}}.dump() << "\n";
  }
  return dir / "attrs.jsonl";
}

}  // namespace

TEST(Split, Examples) {
  auto [train, test] = split_indices(10, 4, 0.1);
  EXPECT_EQ(train.size(), 9u);
  EXPECT_EQ(test.size(), 1u);
  auto [big_train, big_test] = split_indices(30000, 4, 0.1);
  EXPECT_EQ(big_train.size(), 27000u);
  EXPECT_EQ(big_test.size(), 3000u);
  std::vector<std::size_t> all(big_train);
  all.insert(all.end(), big_test.begin(), big_test.end());
  std::sort(all.begin(), all.end());
  for (std::size_t i = 0; i < all.size(); ++i) ASSERT_EQ(all[i], i);
  EXPECT_EQ(split_indices(100, 9, 0.2), split_indices(100, 9, 0.2));
  EXPECT_NE(split_indices(100, 9, 0.2), split_indices(100, 10, 0.2));
}

TEST(Ingestion, LoadsManifestAndSplits) {
  const auto dir = temp_dir("ok");
  const auto manifest = write_faces(dir, 10);
  LoadOptions opt;
  opt.split_seed = 3;
  auto split = load_dataset(dir, manifest, opt);
  EXPECT_EQ(split.train.size(), 9u);
  EXPECT_EQ(split.test.size(), 1u);
  EXPECT_EQ(split.train.resolution, 8);
  EXPECT_EQ(split.train.attribute_names, (std::vector<std::string>{"Male", "Smiling"}));
  std::set<std::string> files;
  for (const auto* d : {&split.train, &split.test})
    for (const auto& r : d->records) {
      files.insert(r.file);
      const int i = std::stoi(r.file.substr(3));
      EXPECT_EQ(r.attributes.values(), (std::vector<int>{(i / 2) % 2, i % 2}));
      const auto expected = png::decode_image(png::encode_image(blob_image(static_cast<std::uint64_t>(i), 8)));
      EXPECT_TRUE(std::equal(r.image.data().begin(), r.image.data().end(), expected.data().begin()));
    }
  EXPECT_EQ(files.size(), 10u);

  auto again = load_dataset(dir, manifest, opt);
  for (std::size_t i = 0; i < split.test.size(); ++i) EXPECT_EQ(again.test.records[i].file, split.test.records[i].file);

  opt.attribute_names = {"Smiling", "Male"};
  auto reordered = load_dataset(dir, manifest, opt);
  EXPECT_EQ(reordered.train.attribute_names, opt.attribute_names);
  fs::remove_all(dir);
}

TEST(Ingestion, DirectoryWithoutManifest) {
  const auto dir = temp_dir("plain");
  for (int i = 0; i < 4; ++i) png::write_image(dir / ("p" + std::to_string(i) + ".png"), blob_image(i, 8));
  LoadOptions opt;
  opt.test_fraction = 0;
  auto split = load_dataset(dir, {}, opt);
  EXPECT_EQ(split.train.size(), 4u);
  EXPECT_TRUE(split.train.attribute_names.empty());
  EXPECT_EQ(split.train.records.front().file, "p0.png");
  fs::remove_all(dir);
}

TEST(Ingestion, OffendersAreListed) {
  const auto dir = temp_dir("bad");
  write_faces(dir, 3);
  png::write_image(dir / "wide.png", Image(3, 8, 16));
  png::write_image(dir / "small.png", Image(3, 4, 4));
  {
    std::ofstream m(dir / "bad.jsonl");
    m << R"({"file": "img0.png", "attrs": {"Male": 0, "Smiling": 1}})" << "\n";
    m << R"({"file": "img1.png", "attrs": {"Male": 2, "Smiling": 1}})" << "\n";
    m << R"({"file": "img2.png", "attrs": {"Male": 1}})" << "\n";
    m << R"({"file": "gone.png", "attrs": {"Male": 1, "Smiling": 0}})" << "\n";
    m << R"({"file": "wide.png", "attrs": {"Male": 1, "Smiling": 0}})" << "\n";
    m << R"({"file": "small.png", "attrs": {"Male": 1, "Smiling": 0}})" << "\n";
    m << R"({"file": "img0.png", "attrs": {"Male": 1, "Smiling": 0, "Hat": 1}})" << "\n";
  }
  try {
    load_dataset(dir, dir / "bad.jsonl");
    FAIL() << "expected IngestionError";
  } catch (const IngestionError& e) {
    // img1 reports both the bad value and the resulting missing attribute.
    EXPECT_EQ(e.offenders().size(), 7u);
    std::string all;
    for (const auto& o : e.offenders()) all += o + "\n";
    for (const char* f : {"img1.png", "img2.png", "gone.png", "wide.png", "small.png", "Hat"})
      EXPECT_NE(all.find(f), std::string::npos) << f;
  }
  EXPECT_THROW(load_dataset(dir, dir / "absent.jsonl"), IngestionError);
  fs::remove_all(dir);
}

TEST(Downsample, Examples) {
  Image constant(3, 8, 8, 0.25f);
  for (int r : {8, 4, 2, 1}) {
    auto d = downsample_image(constant, r);
    EXPECT_EQ(d.height(), r);
    for (float v : d.data()) EXPECT_EQ(v, 0.25f);
  }
  Image stripes(1, 2, 2);
  stripes.at(0, 0, 0) = stripes.at(0, 0, 1) = -1;
  stripes.at(0, 1, 0) = stripes.at(0, 1, 1) = 1;
  EXPECT_EQ(downsample_image(stripes, 1).at(0, 0, 0), 0.0f);
  EXPECT_THROW(downsample_image(constant, 3), InvalidInput);
}

TEST(Downsample, MatchesBlockMeanAndPyramid) {
  Rng rng(1);
  auto img = random_image(8, rng);
  for (int r : {4, 2}) {
    const Map oracle = ref_avgpool(image_map(img), 8 / r);
    const Map got = image_map(downsample_image(img, r));
    for (std::size_t i = 0; i < oracle.v.size(); ++i) EXPECT_NEAR(got.v[i], oracle.v[i], 1e-6);
  }
  auto big = random_image(16, rng);
  auto direct = downsample_image(big, 4);
  auto chained = downsample_image(downsample_image(big, 8), 4);
  for (std::size_t i = 0; i < direct.data().size(); ++i) EXPECT_NEAR(direct.data()[i], chained.data()[i], 1e-6);
}

TEST(BlurProbe, Examples) {
  Image constant(3, 8, 8, -0.5f);
  const Image blurred = blur_context_probe(constant, 2);
  for (float v : blurred.data()) EXPECT_NEAR(v, -0.5f, 1e-7);
  Rng rng(2);
  auto img = random_image(8, rng);
  auto same = blur_context_probe(img, 8);
  EXPECT_TRUE(std::equal(same.data().begin(), same.data().end(), img.data().begin()));
  const Map oracle = ref_bilinear(ref_avgpool(image_map(img), 2), 8, 8);
  const Map got = image_map(blur_context_probe(img, 4));
  for (std::size_t i = 0; i < oracle.v.size(); ++i) EXPECT_NEAR(got.v[i], oracle.v[i], 1e-6);
}

TEST(Augment, FlipMatchesIndexReversal) {
  Image img(3, 4, 4);
  MaskImage mask(4, 4);
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < 4; ++y)
      for (int x = 0; x < 4; ++x) img.at(c, y, x) = static_cast<float>(c * 16 + y * 4 + x) / 48.0f - 0.5f;
  mask.set(0, 0, true);
  mask.set(1, 0, true);
  mask.set(3, 2, true);
  auto [out, m] = augment_with(img, mask, {true, 0.0});
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < 4; ++y)
      for (int x = 0; x < 4; ++x) EXPECT_EQ(out.at(c, y, x), img.at(c, y, 3 - x));
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 4; ++x) EXPECT_EQ(m.at(y, x), mask.at(y, 3 - x));
  auto [twice, m2] = augment_with(out, m, {true, 0.0});
  EXPECT_TRUE(std::equal(twice.data().begin(), twice.data().end(), img.data().begin()));
  EXPECT_EQ(m2, mask);
}

TEST(Augment, ZeroAngleIsIdentityAndRotationKeepsBinaryMask) {
  Rng rng(3);
  auto img = random_image(16, rng);
  MaskImage mask = center_mask(16, 16);
  auto [same, m] = augment_with(img, mask, {false, 0.0});
  for (std::size_t i = 0; i < img.data().size(); ++i) EXPECT_NEAR(same.data()[i], img.data()[i], 1e-6);
  EXPECT_EQ(m, mask);
  auto [rot, rm] = augment_with(img, mask, {false, 17.0});
  EXPECT_GT(rm.count(), 0u);
  for (auto v : rm.data()) EXPECT_TRUE(v == 0 || v == 1);
  for (float v : rot.data()) EXPECT_TRUE(v >= -1.0f && v <= 1.0f);
  // 90 degrees about the centre of an even grid is an exact permutation.
  auto [quarter, qm] = augment_with(img, mask, {false, 90.0});
  std::vector<float> a(quarter.data().begin(), quarter.data().end());
  std::vector<float> b(img.data().begin(), img.data().end());
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-5);
  EXPECT_EQ(qm, mask);
}

TEST(Augment, SampledParametersInRange) {
  Rng rng(4);
  int flips = 0;
  for (int i = 0; i < 2000; ++i) {
    auto p = sample_augment_params(rng);
    EXPECT_LE(std::abs(p.angle_degrees), 30.0);
    flips += p.flip;
  }
  EXPECT_NEAR(flips / 2000.0, 0.5, 0.05);
  Rng a(5), b(5);
  auto img = blob_image(1, 8);
  MaskImage mask = center_mask(8, 8);
  EXPECT_TRUE(std::ranges::equal(augment(a, img, mask).first.data(), augment(b, img, mask).first.data()));
}
