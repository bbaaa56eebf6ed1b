#include "svp/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>
#include <numeric>

#include "svp/errors.hpp"
#include "svp/rng.hpp"

namespace svp {
namespace {

constexpr char kDatasetMagic[8] = {'S', 'V', 'P', 'D', 'A', 'T', 'A', '1'};
constexpr uint32_t kDatasetVersion = 1;

const std::array<std::array<uint8_t, 7>, 12> kFont = {{
    {0x0E, 0x11, 0x13, 0x15, 0x19, 0x11, 0x0E},  // 0
    {0x04, 0x0C, 0x04, 0x04, 0x04, 0x04, 0x0E},  // 1
    {0x0E, 0x11, 0x01, 0x02, 0x04, 0x08, 0x1F},  // 2
    {0x1F, 0x02, 0x04, 0x02, 0x01, 0x11, 0x0E},  // 3
    {0x02, 0x06, 0x0A, 0x12, 0x1F, 0x02, 0x02},  // 4
    {0x1F, 0x10, 0x1E, 0x01, 0x01, 0x11, 0x0E},  // 5
    {0x06, 0x08, 0x10, 0x1E, 0x11, 0x11, 0x0E},  // 6
    {0x1F, 0x01, 0x02, 0x04, 0x08, 0x08, 0x08},  // 7
    {0x0E, 0x11, 0x11, 0x0E, 0x11, 0x11, 0x0E},  // 8
    {0x0E, 0x11, 0x11, 0x0F, 0x01, 0x02, 0x0C},  // 9
    {0x00, 0x00, 0x00, 0x00, 0x00, 0x0C, 0x0C},  // .
    {0x00, 0x00, 0x00, 0x1F, 0x00, 0x00, 0x00},  // -
}};

void check_counts(int64_t n, int64_t t, int64_t hw) {
  if (n <= 0) throw ConfigError("n must be positive");
  if (t <= 0) throw ConfigError("t must be positive");
  if (hw <= 0) throw ConfigError("image size must be positive");
  if (t < 2) throw ConfigError("t must be at least 2");
}

bool glyph_pixel(const SpriteConfig& cfg, int glyph, int64_t r, int64_t c) {
  if (cfg.glyph == Glyph::Square) return true;
  const auto& rows = kFont[static_cast<size_t>(glyph % 10)];
  const int64_t gr = r * 7 / cfg.sprite_size;
  const int64_t gc = c * 5 / cfg.sprite_size;
  return (rows[static_cast<size_t>(gr)] >> (4 - gc)) & 1;
}

// Reflects one coordinate into [0, limit]; returns true on wall contact.
bool reflect(double& pos, double& vel, double limit) {
  bool hit = false;
  if (pos < 0) {
    pos = -pos;
    vel = std::abs(vel);
    hit = true;
  } else if (pos > limit) {
    pos = 2 * limit - pos;
    vel = -std::abs(vel);
    hit = true;
  }
  pos = std::clamp(pos, 0.0, limit);
  return hit;
}

}  // namespace

std::span<const float> VideoDataset::sequence(int64_t i) const {
  if (i < 0 || i >= n) throw ShapeError("sequence index out of range");
  return {data.data() + i * sequence_size(), static_cast<size_t>(sequence_size())};
}

std::span<const float> VideoDataset::frame(int64_t i, int64_t step) const {
  if (step < 0 || step >= t) throw ShapeError("frame index out of range");
  return sequence(i).subspan(static_cast<size_t>(step * frame_size()),
                             static_cast<size_t>(frame_size()));
}

const std::array<uint8_t, 7>& glyph_rows(char ch) {
  if (ch >= '0' && ch <= '9') return kFont[static_cast<size_t>(ch - '0')];
  if (ch == '.') return kFont[10];
  if (ch == '-') return kFont[11];
  throw Error(std::string("no glyph for '") + ch + "'");
}

std::vector<float> simulate_sprites(std::vector<SpriteState> sprites, int64_t t, int64_t hw,
                                    const SpriteConfig& cfg, uint64_t seed) {
  const int64_t size = cfg.sprite_size;
  const double limit = static_cast<double>(hw - size);
  Rng bounce(seed);
  std::vector<float> frames(static_cast<size_t>(t * hw * hw), 0.0f);
  for (int64_t f = 0; f < t; ++f) {
    float* img = frames.data() + f * hw * hw;
    for (const auto& s : sprites) {
      const auto x0 = static_cast<int64_t>(std::lround(s.x));
      const auto y0 = static_cast<int64_t>(std::lround(s.y));
      for (int64_t r = 0; r < size; ++r)
        for (int64_t c = 0; c < size; ++c)
          if (glyph_pixel(cfg, s.glyph, r, c))
            img[(y0 + r) * hw + (x0 + c)] = 1.0f;  // max blend of binary glyphs
    }
    if (f + 1 == t) break;
    for (auto& s : sprites) {
      s.x += s.vx;
      s.y += s.vy;
      const bool hit_x = reflect(s.x, s.vx, limit);
      const bool hit_y = reflect(s.y, s.vy, limit);
      if ((hit_x || hit_y) && cfg.bounce_std > 0) {
        const double speed = std::hypot(s.vx, s.vy);
        const double angle = std::atan2(s.vy, s.vx) + cfg.bounce_std * bounce.normal();
        const double vx = speed * std::cos(angle), vy = speed * std::sin(angle);
        // The perturbed direction must still point away from the wall it hit.
        s.vx = hit_x ? std::copysign(vx, s.vx) : vx;
        s.vy = hit_y ? std::copysign(vy, s.vy) : vy;
      }
    }
  }
  return frames;
}

VideoDataset generate_bouncing_sprites(uint64_t seed, int64_t n, int64_t t, int64_t hw,
                                       const SpriteConfig& cfg) {
  check_counts(n, t, hw);
  if (hw < 16) throw ConfigError("sprite frames must be at least 16 pixels");
  if (cfg.sprite_size <= 0 || cfg.sprite_size >= hw)
    throw ConfigError("sprite_size must be in [1, image size)");
  if (cfg.num_sprites <= 0) throw ConfigError("num_sprites must be positive");
  if (cfg.speed_min < 0 || cfg.speed_max < cfg.speed_min)
    throw ConfigError("speed range must satisfy 0 <= speed_min <= speed_max");
  if (cfg.bounce_std < 0) throw ConfigError("bounce_std must be non-negative");

  VideoDataset ds;
  ds.n = n;
  ds.t = t;
  ds.c = 1;
  ds.h = ds.w = hw;
  ds.data.resize(static_cast<size_t>(n * ds.sequence_size()));
  const double limit = static_cast<double>(hw - cfg.sprite_size);
  for (int64_t i = 0; i < n; ++i) {
    Rng r = Rng::derive(seed, static_cast<uint64_t>(i));
    std::vector<SpriteState> sprites(static_cast<size_t>(cfg.num_sprites));
    for (auto& s : sprites) {
      s.x = r.uniform(0, limit);
      s.y = r.uniform(0, limit);
      const double angle = r.uniform(0, 2 * std::numbers::pi);
      const double speed = r.uniform(cfg.speed_min, cfg.speed_max);
      s.vx = speed * std::cos(angle);
      s.vy = speed * std::sin(angle);
      s.glyph = static_cast<int>(r.index(10));
    }
    auto frames = simulate_sprites(std::move(sprites), t, hw, cfg, r.next_u64());
    std::copy(frames.begin(), frames.end(), ds.data.begin() + i * ds.sequence_size());
  }
  ds.metadata = Json{{"generator", "bouncing_sprites"},
                     {"seed", seed},
                     {"n", n},
                     {"t", t},
                     {"size", hw},
                     {"num_sprites", cfg.num_sprites},
                     {"sprite_size", cfg.sprite_size},
                     {"speed_min", cfg.speed_min},
                     {"speed_max", cfg.speed_max},
                     {"bounce_std", cfg.bounce_std},
                     {"glyph", cfg.glyph == Glyph::Square ? "square" : "digits"}};
  return ds;
}

VideoDataset generate_panning_scene(uint64_t seed, int64_t n, int64_t t, int64_t hw,
                                    const PanConfig& pan) {
  check_counts(n, t, hw);
  if (!std::isfinite(pan.vx) || !std::isfinite(pan.vy))
    throw ConfigError("pan velocity must be finite");
  if (pan.exact && (pan.vx != std::round(pan.vx) || pan.vy != std::round(pan.vy)))
    throw ConfigError("exact panning requires an integer pan velocity");
  if (pan.components <= 0) throw ConfigError("texture needs at least one component");

  // One periodic texture per seed: a sum of plane waves whose frequencies are
  // whole cycles per frame width, so cyclic shifts are seamless.
  struct Wave {
    double fx, fy, phase, amp;
  };
  Rng tex = Rng::derive(seed, ~uint64_t{0});
  std::vector<Wave> waves;
  for (int k = 0; k < pan.components; ++k) {
    Wave wv{};
    wv.fx = static_cast<double>(2 + tex.index(3));
    wv.fy = static_cast<double>(tex.index(5) - 2);
    wv.phase = tex.uniform(0, 2 * std::numbers::pi);
    wv.amp = 0.4 / pan.components;
    waves.push_back(wv);
  }
  const double period = static_cast<double>(hw);
  auto texture = [&](double x, double y) {
    double v = 0.5;
    for (const auto& wv : waves)
      v += wv.amp * std::sin(2 * std::numbers::pi * (wv.fx * x + wv.fy * y) / period + wv.phase);
    return static_cast<float>(std::clamp(v, 0.0, 1.0));
  };

  VideoDataset ds;
  ds.n = n;
  ds.t = t;
  ds.c = 1;
  ds.h = ds.w = hw;
  ds.data.resize(static_cast<size_t>(n * ds.sequence_size()));
  for (int64_t i = 0; i < n; ++i) {
    Rng r = Rng::derive(seed, static_cast<uint64_t>(i));
    const int64_t ox = r.index(hw), oy = r.index(hw);
    float* seq = ds.data.data() + i * ds.sequence_size();
    for (int64_t row = 0; row < hw; ++row)
      for (int64_t col = 0; col < hw; ++col)
        seq[row * hw + col] = texture(static_cast<double>(col - ox), static_cast<double>(row - oy));
    for (int64_t f = 1; f < t; ++f) {
      float* img = seq + f * hw * hw;
      if (pan.exact) {
        const auto sx = static_cast<int64_t>(pan.vx) * f, sy = static_cast<int64_t>(pan.vy) * f;
        for (int64_t row = 0; row < hw; ++row) {
          const int64_t src_row = ((row - sy) % hw + hw) % hw;
          for (int64_t col = 0; col < hw; ++col) {
            const int64_t src_col = ((col - sx) % hw + hw) % hw;
            img[row * hw + col] = seq[src_row * hw + src_col];
          }
        }
      } else {
        for (int64_t row = 0; row < hw; ++row)
          for (int64_t col = 0; col < hw; ++col)
            img[row * hw + col] = texture(static_cast<double>(col - ox) - pan.vx * f,
                                          static_cast<double>(row - oy) - pan.vy * f);
      }
    }
  }
  ds.metadata = Json{{"generator", "panning_scene"},
                     {"seed", seed},
                     {"n", n},
                     {"t", t},
                     {"size", hw},
                     {"pan_vx", pan.vx},
                     {"pan_vy", pan.vy},
                     {"exact", pan.exact},
                     {"components", pan.components}};
  return ds;
}

VideoDataset subset(const VideoDataset& ds, int64_t begin, int64_t end) {
  if (begin < 0 || end < begin || end > ds.n) throw ShapeError("subset range out of bounds");
  VideoDataset out;
  out.n = end - begin;
  out.t = ds.t;
  out.c = ds.c;
  out.h = ds.h;
  out.w = ds.w;
  out.metadata = ds.metadata;
  out.data.assign(ds.data.begin() + begin * ds.sequence_size(),
                  ds.data.begin() + end * ds.sequence_size());
  return out;
}

DatasetSplit split(const VideoDataset& ds, std::array<double, 3> ratios) {
  double sum = 0;
  for (double r : ratios) {
    if (!(r >= 0)) throw ConfigError("split ratios must be non-negative");
    sum += r;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw ConfigError("split ratios must sum to 1");

  // Largest-remainder apportionment keeps zero ratios at zero.
  std::array<int64_t, 3> counts{};
  std::array<double, 3> remainder{};
  int64_t assigned = 0;
  for (size_t i = 0; i < 3; ++i) {
    const double exact = ratios[i] * static_cast<double>(ds.n);
    counts[i] = static_cast<int64_t>(std::floor(exact + 1e-9));
    remainder[i] = exact - static_cast<double>(counts[i]);
    assigned += counts[i];
  }
  std::array<size_t, 3> order{0, 1, 2};
  std::stable_sort(order.begin(), order.end(),
                   [&](size_t a, size_t b) { return remainder[a] > remainder[b]; });
  for (size_t j = 0; assigned < ds.n; ++j, ++assigned) counts[order[j % 3]] += 1;

  static constexpr const char* kNames[3] = {"train", "val", "test"};
  for (size_t i = 0; i < 3; ++i)
    if (ratios[i] > 0 && counts[i] == 0)
      throw ConfigError(std::string("split '") + kNames[i] + "' rounds to zero sequences");

  DatasetSplit out;
  out.train = subset(ds, 0, counts[0]);
  out.val = subset(ds, counts[0], counts[0] + counts[1]);
  out.test = subset(ds, counts[0] + counts[1], ds.n);
  return out;
}

void save_dataset(const VideoDataset& ds, const std::string& path) {
  if (static_cast<int64_t>(ds.data.size()) != ds.n * ds.sequence_size())
    throw ShapeError("dataset buffer does not match its shape");
  {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path);
    out.write(kDatasetMagic, sizeof(kDatasetMagic));
    out.write(reinterpret_cast<const char*>(&kDatasetVersion), sizeof(kDatasetVersion));
    for (int64_t d : ds.shape()) {
      const auto u = static_cast<uint64_t>(d);
      out.write(reinterpret_cast<const char*>(&u), sizeof(u));
    }
    out.write(reinterpret_cast<const char*>(ds.data.data()),
              static_cast<std::streamsize>(ds.data.size() * sizeof(float)));
    if (!out) throw IoError("short write to " + path);
  }
  Json side = {{"format", "svp-dataset"},
               {"version", kDatasetVersion},
               {"dtype", "float32"},
               {"layout", "NTCHW"},
               {"shape", ds.shape()},
               {"metadata", ds.metadata}};
  std::ofstream meta(path + ".json", std::ios::trunc);
  if (!meta) throw IoError("cannot write " + path + ".json");
  meta << side.dump(2) << "\n";
}

VideoDataset load_dataset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open dataset " + path);
  char magic[8];
  uint32_t version = 0;
  in.read(magic, sizeof(magic));
  in.read(reinterpret_cast<char*>(&version), sizeof(version));
  if (!in || std::memcmp(magic, kDatasetMagic, sizeof(magic)) != 0)
    throw IoError(path + " is not a dataset file");
  if (version != kDatasetVersion)
    throw VersionError("dataset version " + std::to_string(version) + " is not supported");
  uint64_t shape[5];
  in.read(reinterpret_cast<char*>(shape), sizeof(shape));
  VideoDataset ds;
  ds.n = static_cast<int64_t>(shape[0]);
  ds.t = static_cast<int64_t>(shape[1]);
  ds.c = static_cast<int64_t>(shape[2]);
  ds.h = static_cast<int64_t>(shape[3]);
  ds.w = static_cast<int64_t>(shape[4]);
  ds.data.resize(static_cast<size_t>(ds.n * ds.sequence_size()));
  in.read(reinterpret_cast<char*>(ds.data.data()),
          static_cast<std::streamsize>(ds.data.size() * sizeof(float)));
  if (!in) throw IoError("dataset " + path + " is truncated");
  std::ifstream meta(path + ".json");
  if (meta) {
    try {
      ds.metadata = Json::parse(meta).value("metadata", Json::object());
    } catch (const Json::exception& e) {
      throw IoError("malformed dataset sidecar: " + std::string(e.what()));
    }
  }
  return ds;
}

VideoDataset generate_from_spec(const Json& spec) {
  if (!spec.is_object()) throw ConfigError("dataset spec must be a JSON object");
  const std::string kind = spec.value("kind", std::string("sprites"));
  std::vector<std::string> known{"kind", "seed", "n", "t", "size"};
  if (kind == "sprites") {
    known.insert(known.end(), {"num_sprites", "sprite_size", "speed_min", "speed_max",
                               "bounce_std", "glyph"});
  } else if (kind == "panning") {
    known.insert(known.end(), {"vx", "vy", "exact", "components"});
  } else {
    throw ConfigError("unknown dataset kind '" + kind + "' (expected sprites or panning)");
  }
  for (const auto& item : spec.items())
    if (std::find(known.begin(), known.end(), item.key()) == known.end())
      throw ConfigError("unknown key '" + item.key() + "' for " + kind + " datasets");
  try {
    const auto seed = spec.value("seed", uint64_t{0});
    const auto n = spec.value("n", int64_t{64});
    const auto t = spec.value("t", int64_t{25});
    const auto size = spec.value("size", int64_t{32});
    if (kind == "sprites") {
      SpriteConfig c;
      c.num_sprites = spec.value("num_sprites", c.num_sprites);
      c.sprite_size = spec.value("sprite_size", c.sprite_size);
      c.speed_min = spec.value("speed_min", c.speed_min);
      c.speed_max = spec.value("speed_max", c.speed_max);
      c.bounce_std = spec.value("bounce_std", c.bounce_std);
      const auto glyph = spec.value("glyph", std::string("digits"));
      if (glyph == "digits") c.glyph = Glyph::Digits;
      else if (glyph == "square") c.glyph = Glyph::Square;
      else throw ConfigError("unknown glyph '" + glyph + "' (expected digits or square)");
      return generate_bouncing_sprites(seed, n, t, size, c);
    }
    PanConfig p;
    p.vx = spec.value("vx", p.vx);
    p.vy = spec.value("vy", p.vy);
    p.exact = spec.value("exact", p.exact);
    p.components = spec.value("components", p.components);
    return generate_panning_scene(seed, n, t, size, p);
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("bad dataset spec: ") + e.what());
  }
}

}  // namespace svp
