#include <doctest.h>

#include <random>

#include "mmtsm/pipeline/augment.hpp"
#include "mmtsm/pipeline/batch.hpp"
#include "test_util.hpp"

using namespace mmtsm;

namespace {

Image rand_image(int w, int h, int c, std::uint64_t seed) {
  Image img(w, h, c);
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> d(0, 255);
  for (auto& px : img.data) px = static_cast<std::uint8_t>(d(rng));
  return img;
}

AugmentConfig plain_config(int crop) {
  AugmentConfig cfg;
  cfg.scales = {1.0};
  cfg.flip_prob = 0.0;
  cfg.crop_size = crop;
  cfg.scale_target = crop;
  cfg.mean = {0.0, 0.0, 0.0};
  cfg.stdev = {1.0, 1.0, 1.0};
  return cfg;
}

}  // namespace

TEST_CASE("full-frame crop without jitter reduces to a 255 division") {
  Image img = rand_image(8, 8, 3, 1);
  AugmentConfig cfg = plain_config(8);
  GroupDraw draw;  // scale 1, centered, no flip
  TensorR out = apply_train_augment({&img}, cfg, draw, 3);
  REQUIRE(out.shape() == std::vector<int>{1, 8, 8, 3});
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 8; ++x)
      for (int c = 0; c < 3; ++c)
        CHECK(out.at(0, y, x, c) == static_cast<Real>(img.at(y, x, c)) / 255.0);
}

TEST_CASE("flipped output is the exact mirror of the unflipped output") {
  Image img = rand_image(16, 16, 3, 2);
  AugmentConfig cfg = plain_config(12);
  GroupDraw draw;
  draw.scale = 0.8;
  draw.u = 0.3;
  draw.v = 0.7;
  draw.flip = false;
  TensorR plain = apply_train_augment({&img}, cfg, draw, 3);
  draw.flip = true;
  TensorR flipped = apply_train_augment({&img}, cfg, draw, 3);
  for (int y = 0; y < 12; ++y)
    for (int x = 0; x < 12; ++x)
      for (int c = 0; c < 3; ++c)
        CHECK(flipped.at(0, y, 11 - x, c) == plain.at(0, y, x, c));
}

TEST_CASE("grayscale sources replicate into every output channel") {
  Image img = rand_image(8, 8, 1, 3);
  TensorR out = apply_train_augment({&img}, plain_config(6), GroupDraw{}, 3);
  for (int y = 0; y < 6; ++y)
    for (int x = 0; x < 6; ++x) {
      CHECK(out.at(0, y, x, 0) == out.at(0, y, x, 1));
      CHECK(out.at(0, y, x, 0) == out.at(0, y, x, 2));
    }
}

TEST_CASE("normalization is invertible channel by channel") {
  TensorR stack = testutil::rand_tensor({2, 4, 4, 3}, 5, 0.0, 255.0);
  TensorR copy = stack;
  const std::array<Real, 3> mean = {0.4, 0.5, 0.6};
  const std::array<Real, 3> stdev = {0.2, 0.25, 0.3};
  normalize_stack(stack, mean, stdev);
  for (std::size_t i = 0; i < stack.numel(); ++i) {
    const int c = static_cast<int>(i % 3);
    const Real back = (stack[i] * stdev[c] + mean[c]) * 255.0;
    CHECK(back == doctest::Approx(copy[i]).epsilon(1e-12));
  }
  std::array<Real, 3> bad = {0.5, 0.0, 0.5};
  CHECK_THROWS_AS(normalize_stack(stack, mean, bad), std::invalid_argument);
}

TEST_CASE("test augmentation at native scale is a center crop") {
  Image img = rand_image(4, 4, 3, 7);
  AugmentConfig cfg = plain_config(2);
  cfg.scale_target = 4;
  TensorR out = apply_test_augment({&img}, cfg, false, 3);
  for (int y = 0; y < 2; ++y)
    for (int x = 0; x < 2; ++x)
      for (int c = 0; c < 3; ++c)
        CHECK(out.at(0, y, x, c) == static_cast<Real>(img.at(y + 1, x + 1, c)) / 255.0);
}

TEST_CASE("test-time flip mirrors the center crop") {
  Image img = rand_image(10, 10, 3, 8);
  AugmentConfig cfg = plain_config(6);
  cfg.scale_target = 8;
  TensorR plain = apply_test_augment({&img}, cfg, false, 3);
  TensorR flipped = apply_test_augment({&img}, cfg, true, 3);
  for (int y = 0; y < 6; ++y)
    for (int x = 0; x < 6; ++x)
      for (int c = 0; c < 3; ++c)
        CHECK(flipped.at(0, y, 5 - x, c) == plain.at(0, y, x, c));
}

TEST_CASE("draw_group honors the flip probability and the scale set") {
  AugmentConfig cfg;
  cfg.scales = {1.0, 0.875, 0.75};
  auto rng = make_engine(99);
  cfg.flip_prob = 0.0;
  for (int i = 0; i < 50; ++i) {
    const GroupDraw d = draw_group(cfg, rng);
    CHECK_FALSE(d.flip);
    CHECK(d.u >= 0.0);
    CHECK(d.u <= 1.0);
    CHECK(d.v >= 0.0);
    CHECK(d.v <= 1.0);
    const bool known = d.scale == 1.0 || d.scale == 0.875 || d.scale == 0.75;
    CHECK(known);
  }
  cfg.flip_prob = 1.0;
  for (int i = 0; i < 20; ++i) CHECK(draw_group(cfg, rng).flip);
  cfg.scales = {};
  CHECK_THROWS_AS(draw_group(cfg, rng), std::invalid_argument);
}

TEST_CASE("frames of mixed sizes are rejected within one modality") {
  Image a = rand_image(8, 8, 3, 1);
  Image b = rand_image(6, 8, 3, 2);
  CHECK_THROWS_AS(apply_train_augment({&a, &b}, plain_config(4), GroupDraw{}, 3),
                  std::invalid_argument);
  CHECK_THROWS_AS(apply_train_augment({}, plain_config(4), GroupDraw{}, 3),
                  std::invalid_argument);
}

TEST_CASE("a training batch applies one draw and one index list per clip") {
  // Modalities of different channel counts and the same geometry, as the
  // loader produces them.
  ClipFrames clip;
  for (int m = 0; m < kModalities; ++m)
    for (int t = 0; t < 10; ++t)
      clip.modality[m].push_back(rand_image(12, 12, m == 0 ? 3 : 1, 100 + m * 10 + t));

  AugmentConfig cfg;
  cfg.scales = {1.0, 0.875, 0.75};
  cfg.flip_prob = 0.5;
  cfg.crop_size = 8;
  cfg.scale_target = 0;  // unused on the training path
  cfg.mean = {0.5, 0.5, 0.5};
  cfg.stdev = {0.5, 0.5, 0.5};

  const int segments = 4, channels = 3, epoch = 3;
  const std::uint64_t seed = 77;
  std::vector<GroupTrace> trace;
  TensorR batch = build_train_batch({&clip}, {0}, {10}, epoch, seed, segments, cfg,
                                    channels, &trace);
  REQUIRE(trace.size() == 1);
  REQUIRE(batch.shape() == std::vector<int>{kModalities * segments, channels, 8, 8});
  REQUIRE(static_cast<int>(trace[0].indices.size()) == segments);

  // Rebuilding each modality stack from the traced decisions must reproduce
  // the batch rows exactly.
  for (int m = 0; m < kModalities; ++m) {
    std::vector<const Image*> sel;
    for (int t : trace[0].indices) sel.push_back(&clip.modality[m][t]);
    TensorR stack = apply_train_augment(sel, cfg, trace[0].draw, channels);
    for (int s = 0; s < segments; ++s) {
      const int row = m * segments + s;
      for (int c = 0; c < channels; ++c)
        for (int y = 0; y < 8; ++y)
          for (int x = 0; x < 8; ++x)
            CHECK(batch.at(row, c, y, x) == stack.at(s, y, x, c));
    }
  }

  // Same (seed, epoch, clip) means the same decisions on a rebuild.
  std::vector<GroupTrace> again;
  build_train_batch({&clip}, {0}, {10}, epoch, seed, segments, cfg, channels, &again);
  CHECK(again[0].indices == trace[0].indices);
  CHECK(again[0].draw.scale == trace[0].draw.scale);
  CHECK(again[0].draw.u == trace[0].draw.u);
  CHECK(again[0].draw.v == trace[0].draw.v);
  CHECK(again[0].draw.flip == trace[0].draw.flip);
}
