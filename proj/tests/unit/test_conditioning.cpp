#include <gtest/gtest.h>

#include <boost/math/distributions/chi_squared.hpp>

#include "progfill/conditioning.hpp"

using namespace progfill;

TEST(Conditioning, RejectsNonBinary) { EXPECT_THROW(AttributeVector({0, 2}), InvalidInput); }

TEST(Conditioning, DrawRule) {
  const AttributeVector a({1, 0, 1});
  EXPECT_EQ(fake_attributes_from_draw(a, 0.3, 1), a);
  EXPECT_EQ(fake_attributes_from_draw(a, 0.7, 1), AttributeVector({1, 1, 1}));
  EXPECT_EQ(fake_attributes_from_draw(AttributeVector({0}), 0.9, 0), AttributeVector({1}));
  Rng rng(1);
  EXPECT_THROW(sample_fake_attributes(rng, AttributeVector()), InvalidInput);
}

TEST(Conditioning, SamplerFrequenciesAndFlipDistance) {
  Rng rng(99);
  const AttributeVector a({0, 1});
  int same = 0;
  int flips[2] = {0, 0};
  for (int i = 0; i < 10000; ++i) {
    const AttributeVector f = sample_fake_attributes(rng, a);
    const auto d = f.hamming(a);
    ASSERT_LE(d, 1u);
    if (d == 0) {
      ++same;
    } else {
      flips[f[0] != a[0] ? 0 : 1]++;
    }
  }
  EXPECT_NEAR(same / 10000.0, 0.5, 0.02);
  const int flipped = flips[0] + flips[1];
  EXPECT_NEAR(flips[0] / static_cast<double>(flipped), 0.5, 0.03);
  const double e = flipped / 2.0;
  const double chi2 = (flips[0] - e) * (flips[0] - e) / e + (flips[1] - e) * (flips[1] - e) / e;
  boost::math::chi_squared dist(1);
  EXPECT_GT(boost::math::cdf(boost::math::complement(dist, chi2)), 0.01);
}

TEST(Conditioning, EncodeAttributes) {
  const auto t = encode_attributes(AttributeVector({1, 0}), 4, 4);
  ASSERT_EQ(t.shape(), (Shape{1, 2, 4, 4}));
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 4; ++x) {
      EXPECT_EQ(t.at(0, 0, y, x), 1.0f);
      EXPECT_EQ(t.at(0, 1, y, x), 0.0f);
    }
  const auto ones = encode_attributes(AttributeVector({1, 1}), 2, 2);
  ASSERT_EQ(ones.size(), 8u);
  for (float v : ones.storage()) EXPECT_EQ(v, 1.0f);
  EXPECT_EQ(encode_attributes(AttributeVector(), 4, 4).size(), 0u);
}

TEST(Conditioning, EncodingIsInjective) {
  std::vector<std::vector<float>> seen;
  for (int bits = 0; bits < 8; ++bits) {
    const AttributeVector a({bits & 1, (bits >> 1) & 1, (bits >> 2) & 1});
    const auto v = encode_attributes(a, 3, 3).storage();
    for (const auto& s : seen) EXPECT_NE(s, v);
    seen.push_back(v);
  }
}

TEST(Conditioning, FromMap) {
  const std::vector<std::string> names{"Male", "Smiling"};
  EXPECT_EQ(attributes_from_map(names, {{"Male", 1}}, true), AttributeVector({1, 0}));
  EXPECT_THROW(attributes_from_map(names, {{"Male", 1}}, false), InvalidInput);
  EXPECT_THROW(attributes_from_map(names, {{"Hat", 1}}, true), InvalidInput);
  EXPECT_THROW(attributes_from_map(names, {{"Male", 3}}, true), InvalidInput);
}
