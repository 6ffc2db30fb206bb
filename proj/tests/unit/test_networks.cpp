#include <gtest/gtest.h>

#include "progfill/ops.hpp"
#include "support/gradcheck.hpp"
#include "support/reference.hpp"

using namespace progfill;
using namespace progfill::testing;

namespace {

GeneratorConfig tiny(int n_attr, SkipVariant v) {
  GeneratorConfig c;
  c.max_resolution = 16;
  c.base_channels = 4;
  c.max_channels = 16;
  c.n_attributes = n_attr;
  c.skip_variant = v;
  return c;
}

Tensor<double> random_input(int batch, int s, Rng& rng) {
  Tensor<double> x(batch, 4, s, s);
  for (int n = 0; n < batch; ++n)
    for (int c = 0; c < 4; ++c)
      for (int y = 0; y < s; ++y)
        for (int xx = 0; xx < s; ++xx) x.at(n, c, y, xx) = c == 3 ? (rng.bernoulli(0.3) ? 1.0 : 0.0) : rng.uniform(-1, 1);
  return x;
}

Tensor<double> attr_batch(const std::vector<std::vector<int>>& rows) {
  std::vector<AttributeVector> v;
  for (const auto& r : rows) v.emplace_back(r);
  return attribute_targets<double>(v);
}

double max_diff(const Tensor<double>& a, const Tensor<double>& b) {
  double d = 0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

const SkipVariant kVariants[] = {SkipVariant::concat, SkipVariant::residual};

}  // namespace

TEST(Generator, ParameterCountMatchesShapeOracle) {
  for (auto v : kVariants)
    for (int n_attr : {0, 2}) {
      const auto cfg = tiny(n_attr, v);
      Rng rng(1);
      for (int s : {4, 8, 16}) EXPECT_EQ(Generator<float>(cfg, s, rng).params().numel(), generator_param_oracle(cfg, s));
      Generator<float> g(cfg, 4, rng);
      std::size_t before = g.params().numel();
      g.grow(rng);
      EXPECT_EQ(g.params().numel() - before, generator_param_oracle(cfg, 8) - generator_param_oracle(cfg, 4));
    }
}

TEST(Generator, LevelCount) {
  GeneratorConfig cfg;
  EXPECT_EQ(cfg.levels(32).size(), 4u);
  EXPECT_EQ(cfg.levels(4).size(), 1u);
  EXPECT_THROW(cfg.levels(12), InvalidInput);
  EXPECT_THROW(cfg.levels(128), InvalidInput);
  Rng rng(1);
  EXPECT_THROW(Generator<float>(cfg, 2, rng), InvalidInput);
}

TEST(Generator, StageFourShapesAndRange) {
  Rng rng(2);
  GeneratorConfig cfg;
  Generator<double> g(cfg, 4, rng);
  auto out = g.forward(constant(random_input(2, 4, rng)), Tensor<double>(2, 0, 1, 1));
  EXPECT_EQ(out->value.shape(), (Shape{2, 3, 4, 4}));
  for (double v : out->value.storage()) {
    EXPECT_GE(v, -1.0);
    EXPECT_LE(v, 1.0);
  }
}

TEST(Generator, MatchesStraightLineReference) {
  for (auto v : kVariants)
    for (double alpha : {1.0, 0.37, 0.0}) {
      Rng rng(3);
      Generator<double> g(tiny(2, v), 8, rng);
      g.set_fade_alpha(alpha);
      const auto x = random_input(2, 8, rng);
      const auto a = attr_batch({{1, 0}, {0, 1}});
      auto out = g.forward(constant(x), a);
      for (int n = 0; n < 2; ++n) {
        const Map ref = reference_generator(g, map_from(x, n), {a.at(n, 0, 0, 0), a.at(n, 1, 0, 0)});
        double d = 0;
        for (int c = 0; c < 3; ++c)
          for (int y = 0; y < 8; ++y)
            for (int xx = 0; xx < 8; ++xx) d = std::max(d, std::abs(ref.at(c, y, xx) - out->value.at(n, c, y, xx)));
        EXPECT_LT(d, 1e-10) << to_string(v) << " alpha " << alpha;
      }
    }
}

TEST(Generator, FadeZeroEqualsUpsampledPreviousStage) {
  for (auto v : kVariants) {
    Rng rng(4);
    Generator<double> g(tiny(2, v), 8, rng);
    const Generator<double> old = [&] {
      Generator<double> o = Generator<double>::zeros(tiny(2, v), 4);
      for (const auto& [name, var] : o.params().entries()) o.params().assign(name, g.params().get(name)->value);
      return o;
    }();
    g.set_fade_alpha(0.0);
    const auto x = random_input(2, 8, rng);
    const auto a = attr_batch({{1, 1}, {0, 0}});
    auto grown = g.forward(constant(x), a)->value;
    auto prev = old.forward(constant(ops::avg_pool(x, 2)), a)->value;
    EXPECT_LT(max_diff(grown, ops::bilinear(prev, 8, 8)), 1e-6);
    g.set_fade_alpha(1.0);
    auto full = g.forward(constant(x), a)->value;
    EXPECT_GT(max_diff(full, grown), 1e-3);
  }
}

TEST(Generator, GrowthPreservesParametersAndMatchesDirectBuild) {
  for (auto v : kVariants) {
    const auto cfg = tiny(1, v);
    Rng rng(5);
    Generator<float> g(cfg, 4, rng);
    const ParamStore<float> before = g.params();
    g.grow(rng);
    EXPECT_EQ(g.stage(), 8);
    EXPECT_EQ(g.fade_alpha(), 0.0);
    for (const auto& [name, var] : before.entries()) EXPECT_EQ(g.params().get(name)->value.storage(), var->value.storage());
    g.grow(rng);
    EXPECT_THROW(g.grow(rng), InvalidInput);
    const Generator<float> direct(cfg, 16, rng);
    ASSERT_EQ(direct.params().size(), g.params().size());
    for (std::size_t i = 0; i < g.params().size(); ++i) {
      EXPECT_EQ(direct.params().entries()[i].first, g.params().entries()[i].first);
      EXPECT_EQ(direct.params().entries()[i].second->value.shape(), g.params().entries()[i].second->value.shape());
    }
  }
}

TEST(Generator, ConcatSkipAblationChangesOutput) {
  Rng rng(6);
  Generator<double> g(tiny(0, SkipVariant::concat), 16, rng);
  const auto x = random_input(1, 16, rng);
  auto with = g.forward(constant(x), Tensor<double>(1, 0, 1, 1))->value;
  g.set_skips_enabled(false);
  auto without = g.forward(constant(x), Tensor<double>(1, 0, 1, 1))->value;
  EXPECT_GT(max_diff(with, without), 1e-4);
}

TEST(Generator, AttributesChangeOutput) {
  for (auto v : kVariants) {
    Rng rng(7);
    Generator<double> g(tiny(2, v), 8, rng);
    const auto x = random_input(1, 8, rng);
    auto a = g.forward(constant(x), attr_batch({{0, 1}}))->value;
    auto b = g.forward(constant(x), attr_batch({{1, 1}}))->value;
    EXPECT_GT(max_diff(a, b), 1e-6);
    auto again = g.forward(constant(x), attr_batch({{0, 1}}))->value;
    EXPECT_EQ(a.storage(), again.storage());
  }
}

TEST(Generator, ForwardValidatesInputs) {
  Rng rng(8);
  Generator<float> g(tiny(2, SkipVariant::residual), 8, rng);
  EXPECT_THROW(generator_forward(g, Image(3, 4, 4), MaskImage(4, 4), AttributeVector({0, 1})), InvalidInput);
  EXPECT_THROW(generator_forward(g, Image(3, 8, 8), MaskImage(8, 8), AttributeVector({0})), InvalidInput);
  const Image out = generator_forward(g, Image(3, 8, 8), MaskImage(8, 8), AttributeVector({0, 1}));
  EXPECT_EQ(out.height(), 8);
}

TEST(Discriminator, ParameterCountAndHeads) {
  for (int n_attr : {0, 2}) {
    const auto cfg = tiny(n_attr, SkipVariant::residual);
    Rng rng(9);
    for (int s : {4, 8, 16}) EXPECT_EQ(Discriminator<float>(cfg, s, rng).params().numel(), discriminator_param_oracle(cfg, s));
    Discriminator<float> d(cfg, 4, rng);
    const auto before = d.params().numel();
    d.grow(rng);
    EXPECT_EQ(d.params().numel() - before, discriminator_param_oracle(cfg, 8) - discriminator_param_oracle(cfg, 4));
    EXPECT_EQ(d.has_attribute_head(), n_attr > 0);
  }
}

TEST(Discriminator, OutputsAndReference) {
  Rng rng(10);
  GeneratorConfig cfg = tiny(2, SkipVariant::residual);
  Discriminator<double> d(cfg, 16, rng);
  for (double alpha : {1.0, 0.6, 0.0}) {
    d.set_fade_alpha(alpha);
    auto img = random_tensor({2, 3, 16, 16}, rng);
    auto out = d.forward(constant(img));
    ASSERT_EQ(out.p_real->value.shape(), (Shape{2, 1, 1, 1}));
    ASSERT_EQ(out.a_hat->value.shape(), (Shape{2, 2, 1, 1}));
    for (int n = 0; n < 2; ++n) {
      const auto ref = reference_discriminator(d, map_from(img, n));
      EXPECT_NEAR(out.p_real->value[static_cast<std::size_t>(n)], ref.p, 1e-12);
      for (int a = 0; a < 2; ++a) EXPECT_NEAR(out.a_hat->value.at(n, a, 0, 0), ref.a[static_cast<std::size_t>(a)], 1e-12);
      EXPECT_GT(ref.p, 0.0);
      EXPECT_LT(ref.p, 1.0);
    }
  }
  Discriminator<double> plain(tiny(0, SkipVariant::residual), 8, rng);
  auto out = plain.forward(constant(random_tensor({1, 3, 8, 8}, rng)));
  EXPECT_EQ(out.a_hat, nullptr);
}

TEST(Discriminator, FadeZeroEqualsPreviousStageOnPooledImage) {
  Rng rng(11);
  const auto cfg = tiny(1, SkipVariant::residual);
  Discriminator<double> small(cfg, 4, rng);
  Discriminator<double> grown = small;
  grown.grow(rng);
  grown.set_fade_alpha(0.0);
  auto img = random_tensor({2, 3, 8, 8}, rng);
  auto a = grown.forward(constant(img));
  auto b = small.forward(constant(ops::avg_pool(img, 2)));
  EXPECT_LT(max_diff(a.p_real->value, b.p_real->value), 1e-12);
  EXPECT_LT(max_diff(a.a_hat->value, b.a_hat->value), 1e-12);
}

TEST(Discriminator, HeadSeparation) {
  Rng rng(12);
  Discriminator<double> d(tiny(2, SkipVariant::residual), 8, rng);
  auto img = constant(random_tensor({1, 3, 8, 8}, rng));
  const auto base = d.forward(img);
  auto perturbed = d;
  auto w = perturbed.params().get("d.cls.w")->value;
  for (auto& v : w.storage()) v += 0.5;
  perturbed.params().assign("d.cls.w", w);
  auto o = perturbed.forward(img);
  EXPECT_EQ(o.a_hat->value.storage(), base.a_hat->value.storage());
  EXPECT_NE(o.p_real->value.storage(), base.p_real->value.storage());
  perturbed = d;
  w = perturbed.params().get("d.attr.w")->value;
  for (auto& v : w.storage()) v += 0.5;
  perturbed.params().assign("d.attr.w", w);
  o = perturbed.forward(img);
  EXPECT_EQ(o.p_real->value.storage(), base.p_real->value.storage());
  EXPECT_NE(o.a_hat->value.storage(), base.a_hat->value.storage());
}

TEST(Discriminator, InputGradientIsFiniteAndNonzero) {
  Rng rng(13);
  Discriminator<double> d(tiny(0, SkipVariant::residual), 8, rng);
  auto img = leaf(random_tensor({1, 3, 8, 8}, rng), true);
  auto out = d.forward(img);
  const double p = out.p_real->value[0];
  backward(out.p_real, Tensor<double>(1, 1, 1, 1, -1.0 / p));
  double norm = 0;
  for (double g : img->grad.storage()) norm += g * g;
  EXPECT_TRUE(std::isfinite(norm));
  EXPECT_GT(norm, 0.0);
}

TEST(Discriminator, MaskedRegionChangesScore) {
  Rng rng(14);
  Discriminator<double> d(tiny(0, SkipVariant::residual), 8, rng);
  auto a = random_tensor({1, 3, 8, 8}, rng);
  auto b = a;
  for (int c = 0; c < 3; ++c) b.at(0, c, 4, 4) += 0.8;
  EXPECT_NE(d.forward(constant(a)).p_real->value[0], d.forward(constant(b)).p_real->value[0]);
}
