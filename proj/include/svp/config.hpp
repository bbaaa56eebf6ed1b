#pragma once

#include <array>
#include <cstdint>
#include <string>

#include "json.hpp"

namespace svp {

using Json = nlohmann::json;

// Model variants: the full model and the two ablations.
enum class Mode { Full, NoAppearance, NoGlobal };

enum class Pooling { SummaryToken, Mean };

// Which appearance vector feeds the frame decoder during training.
enum class AppearanceSource { Chain, Encoded };

// Local dynamics inside the conditioning window at test time.
enum class CondLatents { Posterior, Prior };

std::string to_string(Mode m);
Mode mode_from_string(const std::string& s);

struct ModelConfig {
  int64_t image_size = 32;
  int64_t channels = 1;
  int64_t patch_size = 8;

  // Motion encoder / frame decoder.
  int64_t conv_blocks = 4;
  int64_t conv_channels = 32;

  int64_t d_h = 128;
  int64_t d_y = 32;
  int64_t d_z = 16;
  int64_t d_g = 16;
  int64_t d_w = 64;
  int64_t d_zw = 16;

  int64_t rnn_width = 128;             // posterior recurrence over h^m
  int64_t appearance_rnn_width = 64;   // recurrence over h^w
  int64_t mlp_hidden = 128;            // residual transition MLPs
  int64_t head_hidden = 128;           // Gaussian heads and transition predictor

  int64_t vit_layers = 2;
  int64_t vit_heads = 4;
  int64_t vit_ffn = 128;

  int64_t temporal_width = 64;
  int64_t temporal_heads = 4;
  int64_t temporal_layers = 2;
  int64_t temporal_ffn = 128;
  Pooling pooling = Pooling::SummaryToken;

  double scale_floor = 1e-4;
  Mode mode = Mode::Full;
  AppearanceSource appearance_source = AppearanceSource::Chain;
  CondLatents cond_latents = CondLatents::Posterior;

  void validate() const;
  bool operator==(const ModelConfig&) const = default;
};

struct LossWeights {
  double kl_y1 = 1.0;
  double kl_z_local = 1.0;
  double kl_z1 = 1.0;
  double flow = 1.0;
  double appearance = 1.0;
  bool operator==(const LossWeights&) const = default;
};

struct TrainConfig {
  int64_t steps = 1000;
  int64_t batch_size = 16;
  double learning_rate = 3e-4;
  double grad_clip = 100.0;
  int64_t k = 5;
  int64_t horizon = 10;
  double sigma_obs = 1.0;
  LossWeights weights;
  int64_t kl_warmup_steps = 0;  // 0 disables linear KL warmup
  bool random_crop = true;
  int64_t checkpoint_every = 0;
  int64_t val_every = 0;
  std::array<double, 3> split{0.8, 0.1, 0.1};

  void validate() const;
  bool operator==(const TrainConfig&) const = default;
};

enum class Aggregation { MeanOfN, BestOfN };

struct EvalConfig {
  int64_t k = 5;
  int64_t horizon = 20;
  int64_t n_samples = 5;
  Aggregation aggregation = Aggregation::MeanOfN;
  uint64_t seed = 1234;
  bool baseline = true;

  void validate() const;
  bool operator==(const EvalConfig&) const = default;
};

struct RunConfig {
  uint64_t seed = 0;
  ModelConfig model;
  TrainConfig train;
  EvalConfig eval;
  std::string data_path;
  std::string out_dir = "run";

  // Cross-section checks on top of the per-section ones.
  void validate() const;
  bool operator==(const RunConfig&) const = default;
};

void to_json(Json& j, const ModelConfig& c);
void from_json(const Json& j, ModelConfig& c);
void to_json(Json& j, const LossWeights& c);
void from_json(const Json& j, LossWeights& c);
void to_json(Json& j, const TrainConfig& c);
void from_json(const Json& j, TrainConfig& c);
void to_json(Json& j, const EvalConfig& c);
void from_json(const Json& j, EvalConfig& c);
void to_json(Json& j, const RunConfig& c);
void from_json(const Json& j, RunConfig& c);

// Parses and validates; unknown keys and bad values raise ConfigError.
RunConfig parse_run_config(const std::string& json_text);

}  // namespace svp
