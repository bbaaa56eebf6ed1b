#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "svp/config.hpp"

namespace svp {

// N sequences of T frames, stored contiguously as [N, T, C, H, W] floats in
// [0, 1].
struct VideoDataset {
  std::vector<float> data;
  int64_t n = 0, t = 0, c = 1, h = 0, w = 0;
  Json metadata = Json::object();

  int64_t frame_size() const { return c * h * w; }
  int64_t sequence_size() const { return t * frame_size(); }
  std::span<const float> sequence(int64_t i) const;
  std::span<const float> frame(int64_t i, int64_t step) const;
  std::array<int64_t, 5> shape() const { return {n, t, c, h, w}; }
};

enum class Glyph { Digits, Square };

struct SpriteConfig {
  int64_t num_sprites = 2;
  int64_t sprite_size = 10;
  double speed_min = 1.0;  // pixels/frame
  double speed_max = 3.0;
  double bounce_std = 0.3;  // radians of direction noise at wall contact
  Glyph glyph = Glyph::Digits;
};

// Kinematic state of one sprite; position is the top-left corner.
struct SpriteState {
  double x = 0, y = 0;
  double vx = 0, vy = 0;
  int glyph = 0;  // digit 0-9 when rendering digits
};

VideoDataset generate_bouncing_sprites(uint64_t seed, int64_t n, int64_t t, int64_t hw,
                                       const SpriteConfig& cfg);

// Renders one sequence from explicit initial states. `seed` drives only the
// bounce perturbations.
std::vector<float> simulate_sprites(std::vector<SpriteState> sprites, int64_t t,
                                    int64_t hw, const SpriteConfig& cfg, uint64_t seed);

struct PanConfig {
  double vx = 1.0;  // pixels/frame
  double vy = 0.0;
  bool exact = true;  // integer cyclic shifts only
  int components = 3;
};

VideoDataset generate_panning_scene(uint64_t seed, int64_t n, int64_t t, int64_t hw,
                                    const PanConfig& pan);

// Builds either generator from {"kind": "sprites"|"panning", "seed", "n", "t",
// "size", ...parameters}; unknown keys raise ConfigError.
VideoDataset generate_from_spec(const Json& spec);

struct DatasetSplit {
  VideoDataset train, val, test;
};

DatasetSplit split(const VideoDataset& ds, std::array<double, 3> ratios);

VideoDataset subset(const VideoDataset& ds, int64_t begin, int64_t end);

// 5x7 bitmap for digits 0-9, '.', '-'; row-major, bit 4 is the left column.
const std::array<uint8_t, 7>& glyph_rows(char ch);

// Binary tensor file plus `<path>.json` metadata sidecar.
void save_dataset(const VideoDataset& ds, const std::string& path);
VideoDataset load_dataset(const std::string& path);

}  // namespace svp
