#include <doctest.h>

#include <cmath>

#include "scar/backbone.hpp"
#include "scar/io.hpp"
#include "scar/model.hpp"
#include "scar/rng.hpp"
#include "test_support.hpp"

using namespace scar;
using scar::testing::random_tensor;
using scar::testing::TempDir;

TEST_CASE("vgg layout holds ten 3x3 relu convs with three poolings") {
  const auto defs = vgg10_layout(64, 128, 256, 512);
  REQUIRE(defs.size() == 10);
  int pools = 0;
  for (const auto& d : defs) {
    CHECK(d.ksize == 3);
    CHECK(d.dilation == 1);
    CHECK(d.relu);
    pools += d.pool_after ? 1 : 0;
  }
  CHECK(pools == 3);
  CHECK(defs[0].out_channels == 64);
  CHECK(defs[2].out_channels == 128);
  CHECK(defs[4].out_channels == 256);
  CHECK(defs[9].out_channels == 512);
  // the literal-table override
  CHECK(vgg10_layout(64, 128, 128, 512)[4].out_channels == 128);
}

TEST_CASE("dilation module uses six dilation-2 convs with the halving schedule") {
  const auto defs = dilation_layout(512, 64);
  REQUIRE(defs.size() == 6);
  const int expect[6] = {512, 512, 512, 256, 128, 64};
  for (int i = 0; i < 6; ++i) {
    CHECK(defs[i].out_channels == expect[i]);
    CHECK(defs[i].dilation == 2);
    CHECK(defs[i].ksize == 3);
    CHECK_FALSE(defs[i].pool_after);
  }
}

TEST_CASE("full-width backbone and dilation produce the documented shapes") {
  Rng rng(31);
  ConvStack<float> backbone(3, vgg10_layout(64, 128, 256, 512), rng, InitKind::Msra);
  ConvStack<float> dilation(512, dilation_layout(512, 64), rng, InitKind::Msra);
  backbone.set_training(false);
  dilation.set_training(false);

  auto small = random_tensor<float>({3, 96, 128}, rng, 0.0, 1.0);
  auto mid = backbone.forward(small);
  CHECK(mid.shape == std::vector<int>{512, 12, 16});
  auto out = dilation.forward(mid);
  CHECK(out.shape == std::vector<int>{64, 12, 16});

  auto big = random_tensor<float>({3, 576, 768}, rng, 0.0, 1.0);
  auto mid_big = backbone.forward(big);
  CHECK(mid_big.shape == std::vector<int>{512, 72, 96});
  auto out_big = dilation.forward(mid_big);
  CHECK(out_big.shape == std::vector<int>{64, 72, 96});
  for (float v : out_big.data) CHECK(std::isfinite(v));
}

TEST_CASE("zero input with zero biases stays zero through the stacks") {
  Rng rng(32);
  ConvStack<double> dilation(8, dilation_layout(8, 4), rng, InitKind::Gaussian001);
  Tensor<double> zero({8, 6, 7});
  const auto out = dilation.forward(zero);
  CHECK(out.shape == std::vector<int>{4, 6, 7});
  for (double v : out.data) CHECK(v == 0.0);
}

TEST_CASE("activations stay finite across many random inputs") {
  Rng rng(33);
  ModelConfig cfg = ModelConfig::tiny();
  ScarNet<float> net(cfg, 5);
  net.set_training(false);
  for (int trial = 0; trial < 1000; ++trial) {
    auto x = random_tensor<float>({3, 16, 16}, rng, -2.0, 2.0);
    const auto y = net.forward(x);
    for (float v : y.data) REQUIRE(std::isfinite(v));
  }
}

TEST_CASE("a pixel perturbation only moves features inside the receptive field") {
  Rng rng(34);
  ConvStack<double> backbone(3, vgg10_layout(4, 6, 8, 8), rng, InitKind::Msra);
  ConvStack<double> dilation(8, dilation_layout(8, 4), rng, InitKind::Msra);
  backbone.set_training(false);
  dilation.set_training(false);

  const int h = 320, w = 448;
  auto x = random_tensor<double>({3, h, w}, rng, 0.0, 1.0);
  const auto base = dilation.forward(backbone.forward(x));

  const int scale = backbone.total_pool_factor();
  // input-pixel radius of one output feature, then converted to feature cells
  const int radius_px = backbone.receptive_radius() + scale * dilation.receptive_radius();
  const int bound = radius_px / scale + 1;  // +1 for pooling alignment

  const int py = 157, px = 211;
  for (int c = 0; c < 3; ++c) x.at(c, py, px) += 2.5;
  const auto moved = dilation.forward(backbone.forward(x));

  const int fh = base.dim(1), fw = base.dim(2);
  for (int c = 0; c < base.dim(0); ++c)
    for (int fy = 0; fy < fh; ++fy)
      for (int fx = 0; fx < fw; ++fx) {
        if (base.at(c, fy, fx) == moved.at(c, fy, fx)) continue;
        CHECK(std::abs(fy - py / scale) <= bound);
        CHECK(std::abs(fx - px / scale) <= bound);
      }
}

TEST_CASE("pretrained tensors load by name and reject shape mismatches") {
  TempDir dir("pretrained");
  Rng rng(35);
  // A VGG-style first conv block: 64 x 3 x 3 x 3 plus its bias.
  Tensor<float> w({64, 3, 3, 3});
  for (auto& v : w.data) v = static_cast<float>(rng.normal(0.0, 0.05));
  Tensor<float> b({64});
  save_weight_dir(dir.path(), {{"conv1_1.weight", w}, {"conv1_1.bias", b}});

  ModelConfig cfg;
  cfg.variant = Variant::FCN;
  ScarNet<float> net(cfg, 1);
  load_pretrained(net, dir.path());
  bool found = false;
  for (auto* p : net.params())
    if (p->name == "conv1_1.weight") {
      found = true;
      for (std::size_t i = 0; i < w.data.size(); ++i) CHECK(p->value.data[i] == w.data[i]);
    }
  CHECK(found);

  TempDir bad_dir("pretrained_bad");
  Tensor<float> bad({32, 3, 3, 3});
  save_weight_dir(bad_dir.path(), {{"conv1_1.weight", bad}});
  CHECK_THROWS_WITH_AS(load_pretrained(net, bad_dir.path()),
                       doctest::Contains("conv1_1.weight"), LoadError);
}

TEST_CASE("extract-features inputs must be divisible by eight") {
  ModelConfig cfg = ModelConfig::tiny();
  ScarNet<double> net(cfg, 2);
  Tensor<double> bad({3, 100, 128});
  CHECK_THROWS_WITH_AS(net.forward(bad), doctest::Contains("divisible"), ValidationError);
}
