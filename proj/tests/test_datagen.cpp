#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <set>

#include "support.hpp"
#include "svp/datagen.hpp"
#include "svp/errors.hpp"

using namespace svp;

namespace {

// Reference renderer: a solid square sprite moved by whole-pixel velocity,
// written directly per pixel without the generator's code paths.
std::vector<double> reference_square_centroids(int64_t x0, int64_t size, int64_t vx, int64_t frames) {
  std::vector<double> out;
  for (int64_t f = 0; f < frames; ++f) {
    double sum = 0, weight = 0;
    const int64_t left = x0 + vx * f;
    for (int64_t col = left; col < left + size; ++col) {
      sum += static_cast<double>(col) * size;
      weight += size;
    }
    out.push_back(sum / weight);
  }
  return out;
}

double frame_centroid_x(std::span<const float> img, int64_t hw) {
  double sum = 0, weight = 0;
  for (int64_t r = 0; r < hw; ++r)
    for (int64_t c = 0; c < hw; ++c) {
      sum += img[r * hw + c] * static_cast<double>(c);
      weight += img[r * hw + c];
    }
  return sum / weight;
}

}  // namespace

TEST(Sprites, SameSeedIsBitIdentical) {
  SpriteConfig cfg;
  auto a = generate_bouncing_sprites(3, 6, 12, 32, cfg);
  auto b = generate_bouncing_sprites(3, 6, 12, 32, cfg);
  EXPECT_EQ(a.data, b.data);
  auto c = generate_bouncing_sprites(4, 6, 12, 32, cfg);
  EXPECT_NE(a.data, c.data);
}

TEST(Sprites, ValuesInUnitInterval) {
  auto ds = generate_bouncing_sprites(1, 8, 10, 32, SpriteConfig{});
  for (float v : ds.data) {
    ASSERT_GE(v, 0.0f);
    ASSERT_LE(v, 1.0f);
  }
}

TEST(Sprites, ZeroSpeedGivesStaticFrames) {
  SpriteConfig cfg;
  cfg.speed_min = cfg.speed_max = 0;
  auto ds = generate_bouncing_sprites(9, 3, 6, 32, cfg);
  for (int64_t i = 0; i < ds.n; ++i)
    for (int64_t f = 1; f < ds.t; ++f) {
      auto a = ds.frame(i, 0), b = ds.frame(i, f);
      ASSERT_TRUE(std::equal(a.begin(), a.end(), b.begin()));
    }
}

TEST(Sprites, CentroidsMatchReferenceSimulation) {
  SpriteConfig cfg;
  cfg.num_sprites = 1;
  cfg.sprite_size = 5;
  cfg.glyph = Glyph::Square;
  cfg.bounce_std = 0;
  // Top-left 14 puts the 5-pixel square's centre on column 16.
  auto frames = simulate_sprites({{14, 14, 2, 0, 0}}, 4, 32, cfg, 0);
  auto expected = reference_square_centroids(14, 5, 2, 4);
  for (int64_t f = 0; f < 4; ++f) {
    const double got = frame_centroid_x({frames.data() + f * 32 * 32, 32 * 32}, 32);
    EXPECT_DOUBLE_EQ(got, expected[f]);
  }
  EXPECT_DOUBLE_EQ(expected[0], 16);
  EXPECT_DOUBLE_EQ(expected[3], 22);
}

TEST(Sprites, BoundingBoxesStayInsideFrame) {
  // Brute force: any lit pixel must lie inside the frame, and the lit mass per
  // sprite never gets clipped, so the total lit count for a single square sprite
  // stays constant.
  SpriteConfig cfg;
  cfg.num_sprites = 1;
  cfg.glyph = Glyph::Square;
  cfg.sprite_size = 7;
  cfg.speed_min = 2.5;
  cfg.speed_max = 3.5;
  auto ds = generate_bouncing_sprites(21, 10, 40, 24, cfg);
  for (int64_t i = 0; i < ds.n; ++i)
    for (int64_t f = 0; f < ds.t; ++f) {
      auto img = ds.frame(i, f);
      EXPECT_EQ(std::accumulate(img.begin(), img.end(), 0.0), 49.0);
    }
}

TEST(Sprites, BounceAddsRandomness) {
  SpriteConfig cfg;
  cfg.num_sprites = 1;
  cfg.glyph = Glyph::Square;
  cfg.sprite_size = 4;
  cfg.bounce_std = 0.5;
  std::vector<SpriteState> start{{20, 10, 3, 0.5, 0}};
  auto a = simulate_sprites(start, 20, 32, cfg, 1);
  auto b = simulate_sprites(start, 20, 32, cfg, 2);
  // Identical until the first wall contact, different afterwards.
  EXPECT_TRUE(std::equal(a.begin(), a.begin() + 3 * 32 * 32, b.begin()));
  EXPECT_NE(a, b);
}

TEST(Sprites, OverlapUsesMaxBlend) {
  SpriteConfig cfg;
  cfg.num_sprites = 2;
  cfg.glyph = Glyph::Square;
  cfg.sprite_size = 4;
  auto frames = simulate_sprites({{5, 5, 0, 0, 0}, {7, 5, 0, 0, 0}}, 2, 16, cfg, 0);
  EXPECT_EQ(*std::max_element(frames.begin(), frames.end()), 1.0f);
  EXPECT_EQ(std::accumulate(frames.begin(), frames.begin() + 256, 0.0), 24.0);
}

TEST(Sprites, RejectsBadArguments) {
  SpriteConfig cfg;
  EXPECT_THROW(generate_bouncing_sprites(0, 0, 5, 32, cfg), ConfigError);
  EXPECT_THROW(generate_bouncing_sprites(0, 2, 1, 32, cfg), ConfigError);
  EXPECT_THROW(generate_bouncing_sprites(0, 2, 5, 0, cfg), ConfigError);
  EXPECT_THROW(generate_bouncing_sprites(0, 2, 5, 8, cfg), ConfigError);
  cfg.sprite_size = 32;
  EXPECT_THROW(generate_bouncing_sprites(0, 2, 5, 32, cfg), ConfigError);
  cfg = {};
  cfg.speed_min = 3;
  cfg.speed_max = 1;
  EXPECT_THROW(generate_bouncing_sprites(0, 2, 5, 32, cfg), ConfigError);
}

TEST(Sprites, MetadataEchoesParameters) {
  SpriteConfig cfg;
  cfg.num_sprites = 3;
  auto ds = generate_bouncing_sprites(7, 2, 4, 32, cfg);
  EXPECT_EQ(ds.metadata["generator"], "bouncing_sprites");
  EXPECT_EQ(ds.metadata["seed"], 7);
  EXPECT_EQ(ds.metadata["num_sprites"], 3);
  EXPECT_EQ(ds.metadata["t"], 4);
}

TEST(Panning, ZeroVelocityIsStatic) {
  PanConfig pan;
  pan.vx = 0;
  auto ds = generate_panning_scene(2, 3, 5, 16, pan);
  for (int64_t f = 1; f < 5; ++f) {
    auto a = ds.frame(1, 0), b = ds.frame(1, f);
    EXPECT_TRUE(std::equal(a.begin(), a.end(), b.begin()));
  }
}

TEST(Panning, FrameIsCyclicShiftOfFirst) {
  auto ds = generate_panning_scene(5, 2, 6, 16, PanConfig{});
  for (int64_t f = 0; f < 6; ++f) {
    auto first = ds.frame(0, 0), cur = ds.frame(0, f);
    for (int64_t r = 0; r < 16; ++r)
      for (int64_t c = 0; c < 16; ++c)
        ASSERT_EQ(cur[r * 16 + c], first[r * 16 + ((c - f) % 16 + 16) % 16]);
  }
}

TEST(Panning, PrefixStableAcrossN) {
  auto small = generate_panning_scene(8, 3, 4, 16, PanConfig{});
  auto large = generate_panning_scene(8, 7, 4, 16, PanConfig{});
  EXPECT_TRUE(std::equal(small.data.begin(), small.data.end(), large.data.begin()));
}

TEST(Panning, RejectsFractionalVelocityInExactMode) {
  PanConfig pan;
  pan.vx = 0.5;
  EXPECT_THROW(generate_panning_scene(0, 2, 4, 16, pan), ConfigError);
  pan.exact = false;
  EXPECT_NO_THROW(generate_panning_scene(0, 2, 4, 16, pan));
}

TEST(Panning, DifferencesAreGlobalWhileSpriteDifferencesAreLocal) {
  auto pan = generate_panning_scene(1, 1, 3, 32, PanConfig{});
  SpriteConfig cfg;
  cfg.bounce_std = 0;
  auto spr = generate_bouncing_sprites(1, 1, 3, 32, cfg);
  auto changed = [](const VideoDataset& ds) {
    auto a = ds.frame(0, 0), b = ds.frame(0, 1);
    int64_t n = 0;
    for (size_t i = 0; i < a.size(); ++i) n += a[i] != b[i];
    return n;
  };
  EXPECT_GT(changed(pan), 32 * 32 / 2);
  EXPECT_LT(changed(spr), 2 * 10 * 10 * 2);
  EXPECT_GT(changed(spr), 0);
}

TEST(Split, SizesAndPartition) {
  auto ds = generate_panning_scene(1, 8, 2, 16, PanConfig{});
  auto s = split(ds, {0.5, 0.25, 0.25});
  EXPECT_EQ(s.train.n, 4);
  EXPECT_EQ(s.val.n, 2);
  EXPECT_EQ(s.test.n, 2);
  std::vector<float> joined = s.train.data;
  joined.insert(joined.end(), s.val.data.begin(), s.val.data.end());
  joined.insert(joined.end(), s.test.data.begin(), s.test.data.end());
  EXPECT_EQ(joined, ds.data);
}

TEST(Split, WholeDatasetToTrain) {
  auto ds = generate_panning_scene(1, 5, 2, 16, PanConfig{});
  auto s = split(ds, {1, 0, 0});
  EXPECT_EQ(s.train.data, ds.data);
  EXPECT_EQ(s.val.n, 0);
}

TEST(Split, RejectsRatioRoundingToZero) {
  auto ds = generate_panning_scene(1, 4, 2, 16, PanConfig{});
  EXPECT_THROW(split(ds, {0.9, 0.05, 0.05}), ConfigError);
  EXPECT_THROW(split(ds, {0.5, 0.5, 0.5}), ConfigError);
}

TEST(DatasetFile, RoundTrip) {
  svp::testing::TempDir dir;
  auto ds = generate_bouncing_sprites(2, 3, 5, 16, SpriteConfig{.sprite_size = 6});
  save_dataset(ds, dir.file("d.bin"));
  auto back = load_dataset(dir.file("d.bin"));
  EXPECT_EQ(back.data, ds.data);
  EXPECT_EQ(back.shape(), ds.shape());
  EXPECT_EQ(back.metadata, ds.metadata);
}

TEST(DatasetFile, FromSpec) {
  auto ds = generate_from_spec({{"kind", "panning"}, {"seed", 3}, {"n", 2}, {"t", 3}, {"size", 16}});
  EXPECT_EQ(ds.metadata["generator"], "panning_scene");
  EXPECT_THROW(generate_from_spec({{"kind", "sprites"}, {"vx", 1}}), ConfigError);
  EXPECT_THROW(generate_from_spec({{"kind", "clouds"}}), ConfigError);
}
