#include <gtest/gtest.h>

#include "progfill/ops.hpp"
#include "support/gradcheck.hpp"
#include "support/reference.hpp"

using namespace progfill;
using namespace progfill::testing;

namespace {

Map to_map(const Var<double>& v) { return map_from(v->value, 0); }

double map_diff(const Map& a, const Map& b) {
  double d = 0;
  for (std::size_t i = 0; i < a.v.size(); ++i) d = std::max(d, std::abs(a.v[i] - b.v[i]));
  return d;
}

}  // namespace

TEST(OpsForward, ConvMatchesLoops) {
  Rng rng(1);
  for (int stride : {1, 2})
    for (int pad : {0, 1}) {
      auto x = random_tensor({1, 3, 7, 6}, rng);
      auto w = random_tensor({4, 3, 3, 3}, rng);
      auto b = random_tensor({1, 4, 1, 1}, rng);
      auto y = ops::conv2d(constant(x), constant(w), constant(b), stride, pad);
      EXPECT_LT(map_diff(to_map(y), ref_conv(map_from(x, 0), w, b, stride, pad)), 1e-12);
    }
}

TEST(OpsForward, NormPoolAndResampleMatchLoops) {
  Rng rng(2);
  auto x = random_tensor({1, 2, 8, 8}, rng);
  EXPECT_LT(map_diff(to_map(ops::instance_norm(constant(x))), ref_inorm(map_from(x, 0))), 1e-12);
  EXPECT_LT(map_diff(to_map(ops::avg_pool2(constant(x))), ref_avgpool(map_from(x, 0), 2)), 1e-12);
  EXPECT_LT(map_diff(to_map(ops::upsample_nearest2(constant(x))), ref_nearest2(map_from(x, 0))), 1e-12);
  for (auto [h, w] : {std::pair{16, 16}, std::pair{5, 11}, std::pair{8, 8}, std::pair{3, 3}})
    EXPECT_LT(map_diff(to_map(ops::resize_bilinear(constant(x), h, w)), ref_bilinear(map_from(x, 0), h, w)), 1e-12);
}

TEST(OpsForward, BilinearSameSizeIsIdentity) {
  Rng rng(3);
  auto x = random_tensor({2, 3, 6, 6}, rng);
  auto y = ops::bilinear(x, 6, 6);
  EXPECT_EQ(y.storage(), x.storage());
}

TEST(OpsForward, MaxPoolPicksMaximum) {
  Tensor<double> x(1, 1, 2, 4);
  x.storage() = {1, 5, -2, 0, 3, 2, 4, -1};
  auto y = ops::max_pool2(constant(x));
  EXPECT_EQ(y->value.storage(), (std::vector<double>{5, 4}));
}

TEST(OpsGradient, Conv2d) {
  Rng rng(4);
  for (int stride : {1, 2}) {
    auto x = random_tensor({2, 2, 5, 5}, rng);
    auto w = random_tensor({3, 2, 3, 3}, rng);
    auto b = random_tensor({1, 3, 1, 1}, rng);
    EXPECT_LT(op_gradient_error([&](const Var<double>& v) { return ops::conv2d(v, constant(w), constant(b), stride, 1); }, x), 1e-6);
    EXPECT_LT(op_gradient_error([&](const Var<double>& v) { return ops::conv2d(constant(x), v, constant(b), stride, 1); }, w), 1e-6);
    EXPECT_LT(op_gradient_error([&](const Var<double>& v) { return ops::conv2d(constant(x), constant(w), v, stride, 1); }, b), 1e-6);
  }
}

TEST(OpsGradient, Elementwise) {
  Rng rng(5);
  auto x = random_tensor({2, 3, 4, 4}, rng, -2, 2);
  auto other = random_tensor({2, 3, 4, 4}, rng);
  EXPECT_LT(op_gradient_error([](const Var<double>& v) { return ops::instance_norm(v); }, x), 1e-6);
  EXPECT_LT(op_gradient_error([](const Var<double>& v) { return ops::leaky_relu(v, 0.2); }, x), 1e-6);
  EXPECT_LT(op_gradient_error([](const Var<double>& v) { return ops::relu(v); }, x), 1e-6);
  EXPECT_LT(op_gradient_error([](const Var<double>& v) { return ops::tanh(v); }, x), 1e-6);
  EXPECT_LT(op_gradient_error([](const Var<double>& v) { return ops::sigmoid(v); }, x), 1e-6);
  EXPECT_LT(op_gradient_error([&](const Var<double>& v) { return ops::add(v, constant(other)); }, x), 1e-6);
  EXPECT_LT(op_gradient_error([&](const Var<double>& v) { return ops::lerp(v, constant(other), 0.3); }, x), 1e-6);
  EXPECT_LT(op_gradient_error([&](const Var<double>& v) { return ops::lerp(constant(other), v, 0.3); }, x), 1e-6);
  EXPECT_LT(op_gradient_error([&](const Var<double>& v) { return ops::concat_channels(v, constant(other)); }, x), 1e-6);
  EXPECT_LT(op_gradient_error([&](const Var<double>& v) { return ops::concat_channels(constant(other), v); }, x), 1e-6);
}

TEST(OpsGradient, Resampling) {
  Rng rng(6);
  auto x = random_tensor({2, 2, 4, 4}, rng);
  EXPECT_LT(op_gradient_error([](const Var<double>& v) { return ops::avg_pool2(v); }, x), 1e-6);
  EXPECT_LT(op_gradient_error([](const Var<double>& v) { return ops::max_pool2(v); }, x), 1e-6);
  EXPECT_LT(op_gradient_error([](const Var<double>& v) { return ops::upsample_nearest2(v); }, x), 1e-6);
  EXPECT_LT(op_gradient_error([](const Var<double>& v) { return ops::resize_bilinear(v, 8, 8); }, x), 1e-6);
  EXPECT_LT(op_gradient_error([](const Var<double>& v) { return ops::resize_bilinear(v, 3, 7); }, x), 1e-6);
}

TEST(OpsGradient, Dense) {
  Rng rng(7);
  auto x = random_tensor({3, 2, 4, 4}, rng);
  auto w = random_tensor({5, 32, 1, 1}, rng);
  auto b = random_tensor({1, 5, 1, 1}, rng);
  EXPECT_LT(op_gradient_error([&](const Var<double>& v) { return ops::dense(v, constant(w), constant(b)); }, x), 1e-6);
  EXPECT_LT(op_gradient_error([&](const Var<double>& v) { return ops::dense(constant(x), v, constant(b)); }, w), 1e-6);
  EXPECT_LT(op_gradient_error([&](const Var<double>& v) { return ops::dense(constant(x), constant(w), v); }, b), 1e-6);
}

TEST(Autograd, MultiRootAccumulates) {
  auto x = leaf(Tensor<double>(1, 1, 1, 2, 1.5), true);
  auto a = ops::tanh(x);
  auto b = ops::add(x, x);
  backward<double>({{a, Tensor<double>(1, 1, 1, 2, 1.0)}, {b, Tensor<double>(1, 1, 1, 2, 1.0)}});
  const double expect = 1 - std::tanh(1.5) * std::tanh(1.5) + 2.0;
  EXPECT_NEAR(x->grad[0], expect, 1e-12);
  EXPECT_NEAR(x->grad[1], expect, 1e-12);
}

TEST(Autograd, NoGradGuardSkipsGraph) {
  auto x = leaf(Tensor<double>(1, 1, 1, 1, 0.5), true);
  NoGradGuard ng;
  auto y = ops::tanh(x);
  EXPECT_FALSE(y->requires_grad);
  EXPECT_TRUE(y->inputs.empty());
}
