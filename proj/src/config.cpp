#include "svp/config.hpp"

#include <cmath>
#include <set>

#include "svp/errors.hpp"

namespace svp {
namespace {

void require(bool ok, const std::string& msg) {
  if (!ok) throw ConfigError(msg);
}

void require_positive(int64_t v, const char* name) {
  require(v > 0, std::string(name) + " must be positive, got " + std::to_string(v));
}

// Copies j[key] into `out` when present; type errors become ConfigError.
template <typename T>
void read(const Json& j, const char* key, T& out) {
  auto it = j.find(key);
  if (it == j.end()) return;
  try {
    out = it->get<T>();
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
  }
}

void reject_unknown(const Json& j, std::initializer_list<const char*> known, const char* section) {
  if (!j.is_object()) throw ConfigError(std::string(section) + " must be an object");
  std::set<std::string> names(known.begin(), known.end());
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!names.count(it.key()))
      throw ConfigError(std::string("unknown key '") + it.key() + "' in " + section);
  }
}

const char* pooling_name(Pooling p) { return p == Pooling::Mean ? "mean" : "summary_token"; }

Pooling pooling_from(const std::string& s) {
  if (s == "summary_token") return Pooling::SummaryToken;
  if (s == "mean") return Pooling::Mean;
  throw ConfigError("pooling must be summary_token or mean, got " + s);
}

const char* source_name(AppearanceSource s) {
  return s == AppearanceSource::Encoded ? "encoded" : "chain";
}

AppearanceSource source_from(const std::string& s) {
  if (s == "chain") return AppearanceSource::Chain;
  if (s == "encoded") return AppearanceSource::Encoded;
  throw ConfigError("appearance_source must be chain or encoded, got " + s);
}

const char* cond_name(CondLatents c) { return c == CondLatents::Prior ? "prior" : "posterior"; }

CondLatents cond_from(const std::string& s) {
  if (s == "posterior") return CondLatents::Posterior;
  if (s == "prior") return CondLatents::Prior;
  throw ConfigError("cond_latents must be posterior or prior, got " + s);
}

const char* aggregation_name(Aggregation a) { return a == Aggregation::BestOfN ? "best" : "mean"; }

Aggregation aggregation_from(const std::string& s) {
  if (s == "mean") return Aggregation::MeanOfN;
  if (s == "best") return Aggregation::BestOfN;
  throw ConfigError("aggregation must be mean or best, got " + s);
}

}  // namespace

std::string to_string(Mode m) {
  switch (m) {
    case Mode::Full: return "full";
    case Mode::NoAppearance: return "no_w";
    case Mode::NoGlobal: return "no_z1";
  }
  return "full";
}

Mode mode_from_string(const std::string& s) {
  if (s == "full") return Mode::Full;
  if (s == "no_w") return Mode::NoAppearance;
  if (s == "no_z1") return Mode::NoGlobal;
  throw ConfigError("mode must be full, no_w or no_z1, got " + s);
}

void ModelConfig::validate() const {
  require_positive(image_size, "image_size");
  require_positive(channels, "channels");
  require_positive(patch_size, "patch_size");
  require_positive(conv_blocks, "conv_blocks");
  require_positive(conv_channels, "conv_channels");
  for (auto [v, n] : {std::pair{d_h, "d_h"}, {d_y, "d_y"}, {d_z, "d_z"}, {d_g, "d_g"},
                      {d_w, "d_w"}, {d_zw, "d_zw"}, {rnn_width, "rnn_width"},
                      {appearance_rnn_width, "appearance_rnn_width"},
                      {mlp_hidden, "mlp_hidden"}, {vit_layers, "vit_layers"},
                      {vit_heads, "vit_heads"}, {vit_ffn, "vit_ffn"},
                      {temporal_width, "temporal_width"}, {temporal_heads, "temporal_heads"},
                      {temporal_layers, "temporal_layers"}, {temporal_ffn, "temporal_ffn"}})
    require_positive(v, n);
  require(head_hidden >= 0, "head_hidden must be non-negative");
  require(image_size % patch_size == 0, "image_size " + std::to_string(image_size) +
                                            " is not divisible by patch_size " +
                                            std::to_string(patch_size));
  require((image_size >> conv_blocks) >= 1 && image_size % (int64_t{1} << conv_blocks) == 0,
          "image_size must be divisible by 2^conv_blocks");
  require(d_w % vit_heads == 0, "d_w must be divisible by vit_heads");
  require(temporal_width % temporal_heads == 0, "temporal_width must be divisible by temporal_heads");
  require(scale_floor > 0 && std::isfinite(scale_floor), "scale_floor must be positive");
}

void TrainConfig::validate() const {
  require(steps >= 0, "steps must be non-negative");
  require_positive(batch_size, "batch_size");
  require(learning_rate > 0, "learning_rate must be positive");
  require(grad_clip > 0, "grad_clip must be positive");
  require(k >= 2, "k must be at least 2 (y1 is inferred from two frames)");
  require_positive(horizon, "horizon");
  require(sigma_obs > 0 && std::isfinite(sigma_obs), "sigma_obs must be positive");
  for (double wgt : {weights.kl_y1, weights.kl_z_local, weights.kl_z1, weights.flow,
                     weights.appearance})
    require(wgt >= 0 && std::isfinite(wgt), "loss weights must be finite and non-negative");
  require(kl_warmup_steps >= 0, "kl_warmup_steps must be non-negative");
  require(checkpoint_every >= 0 && val_every >= 0, "intervals must be non-negative");
  double sum = 0;
  for (double r : split) {
    require(r >= 0, "split ratios must be non-negative");
    sum += r;
  }
  require(std::abs(sum - 1.0) <= 1e-9, "split ratios must sum to 1");
}

void EvalConfig::validate() const {
  require(k >= 2, "eval k must be at least 2");
  require_positive(horizon, "eval horizon");
  require_positive(n_samples, "n_samples");
}

void RunConfig::validate() const {
  model.validate();
  train.validate();
  eval.validate();
}

void to_json(Json& j, const ModelConfig& c) {
  j = Json{{"image_size", c.image_size},
           {"channels", c.channels},
           {"patch_size", c.patch_size},
           {"conv_blocks", c.conv_blocks},
           {"conv_channels", c.conv_channels},
           {"d_h", c.d_h},
           {"d_y", c.d_y},
           {"d_z", c.d_z},
           {"d_g", c.d_g},
           {"d_w", c.d_w},
           {"d_zw", c.d_zw},
           {"rnn_width", c.rnn_width},
           {"appearance_rnn_width", c.appearance_rnn_width},
           {"mlp_hidden", c.mlp_hidden},
           {"head_hidden", c.head_hidden},
           {"vit_layers", c.vit_layers},
           {"vit_heads", c.vit_heads},
           {"vit_ffn", c.vit_ffn},
           {"temporal_width", c.temporal_width},
           {"temporal_heads", c.temporal_heads},
           {"temporal_layers", c.temporal_layers},
           {"temporal_ffn", c.temporal_ffn},
           {"pooling", pooling_name(c.pooling)},
           {"scale_floor", c.scale_floor},
           {"mode", to_string(c.mode)},
           {"appearance_source", source_name(c.appearance_source)},
           {"cond_latents", cond_name(c.cond_latents)}};
}

void from_json(const Json& j, ModelConfig& c) {
  reject_unknown(j,
                 {"image_size", "channels", "patch_size", "conv_blocks", "conv_channels", "d_h",
                  "d_y", "d_z", "d_g", "d_w", "d_zw", "rnn_width", "appearance_rnn_width",
                  "mlp_hidden", "head_hidden", "vit_layers", "vit_heads", "vit_ffn",
                  "temporal_width", "temporal_heads", "temporal_layers", "temporal_ffn",
                  "pooling", "scale_floor", "mode", "appearance_source", "cond_latents"},
                 "model");
  read(j, "image_size", c.image_size);
  read(j, "channels", c.channels);
  read(j, "patch_size", c.patch_size);
  read(j, "conv_blocks", c.conv_blocks);
  read(j, "conv_channels", c.conv_channels);
  read(j, "d_h", c.d_h);
  read(j, "d_y", c.d_y);
  read(j, "d_z", c.d_z);
  read(j, "d_g", c.d_g);
  read(j, "d_w", c.d_w);
  read(j, "d_zw", c.d_zw);
  read(j, "rnn_width", c.rnn_width);
  read(j, "appearance_rnn_width", c.appearance_rnn_width);
  read(j, "mlp_hidden", c.mlp_hidden);
  read(j, "head_hidden", c.head_hidden);
  read(j, "vit_layers", c.vit_layers);
  read(j, "vit_heads", c.vit_heads);
  read(j, "vit_ffn", c.vit_ffn);
  read(j, "temporal_width", c.temporal_width);
  read(j, "temporal_heads", c.temporal_heads);
  read(j, "temporal_layers", c.temporal_layers);
  read(j, "temporal_ffn", c.temporal_ffn);
  read(j, "scale_floor", c.scale_floor);
  std::string s;
  if (j.contains("pooling")) { read(j, "pooling", s); c.pooling = pooling_from(s); }
  if (j.contains("mode")) { read(j, "mode", s); c.mode = mode_from_string(s); }
  if (j.contains("appearance_source")) {
    read(j, "appearance_source", s);
    c.appearance_source = source_from(s);
  }
  if (j.contains("cond_latents")) { read(j, "cond_latents", s); c.cond_latents = cond_from(s); }
}

void to_json(Json& j, const LossWeights& c) {
  j = Json{{"kl_y1", c.kl_y1},
           {"kl_z_local", c.kl_z_local},
           {"kl_z1", c.kl_z1},
           {"flow", c.flow},
           {"appearance", c.appearance}};
}

void from_json(const Json& j, LossWeights& c) {
  reject_unknown(j, {"kl_y1", "kl_z_local", "kl_z1", "flow", "appearance"}, "weights");
  read(j, "kl_y1", c.kl_y1);
  read(j, "kl_z_local", c.kl_z_local);
  read(j, "kl_z1", c.kl_z1);
  read(j, "flow", c.flow);
  read(j, "appearance", c.appearance);
}

void to_json(Json& j, const TrainConfig& c) {
  j = Json{{"steps", c.steps},
           {"batch_size", c.batch_size},
           {"learning_rate", c.learning_rate},
           {"grad_clip", c.grad_clip},
           {"k", c.k},
           {"horizon", c.horizon},
           {"sigma_obs", c.sigma_obs},
           {"weights", c.weights},
           {"kl_warmup_steps", c.kl_warmup_steps},
           {"random_crop", c.random_crop},
           {"checkpoint_every", c.checkpoint_every},
           {"val_every", c.val_every},
           {"split", c.split}};
}

void from_json(const Json& j, TrainConfig& c) {
  reject_unknown(j,
                 {"steps", "batch_size", "learning_rate", "grad_clip", "k", "horizon",
                  "sigma_obs", "weights", "kl_warmup_steps", "random_crop", "checkpoint_every",
                  "val_every", "split"},
                 "train");
  read(j, "steps", c.steps);
  read(j, "batch_size", c.batch_size);
  read(j, "learning_rate", c.learning_rate);
  read(j, "grad_clip", c.grad_clip);
  read(j, "k", c.k);
  read(j, "horizon", c.horizon);
  read(j, "sigma_obs", c.sigma_obs);
  if (j.contains("weights")) from_json(j.at("weights"), c.weights);
  read(j, "kl_warmup_steps", c.kl_warmup_steps);
  read(j, "random_crop", c.random_crop);
  read(j, "checkpoint_every", c.checkpoint_every);
  read(j, "val_every", c.val_every);
  read(j, "split", c.split);
}

void to_json(Json& j, const EvalConfig& c) {
  j = Json{{"k", c.k},
           {"horizon", c.horizon},
           {"n_samples", c.n_samples},
           {"aggregation", aggregation_name(c.aggregation)},
           {"seed", c.seed},
           {"baseline", c.baseline}};
}

void from_json(const Json& j, EvalConfig& c) {
  reject_unknown(j, {"k", "horizon", "n_samples", "aggregation", "seed", "baseline"}, "eval");
  read(j, "k", c.k);
  read(j, "horizon", c.horizon);
  read(j, "n_samples", c.n_samples);
  read(j, "seed", c.seed);
  read(j, "baseline", c.baseline);
  if (j.contains("aggregation")) {
    std::string s;
    read(j, "aggregation", s);
    c.aggregation = aggregation_from(s);
  }
}

void to_json(Json& j, const RunConfig& c) {
  j = Json{{"seed", c.seed},      {"model", c.model},         {"train", c.train},
           {"eval", c.eval},      {"data_path", c.data_path}, {"out_dir", c.out_dir}};
}

void from_json(const Json& j, RunConfig& c) {
  reject_unknown(j, {"seed", "model", "train", "eval", "data_path", "out_dir"}, "config");
  read(j, "seed", c.seed);
  if (j.contains("model")) from_json(j.at("model"), c.model);
  if (j.contains("train")) from_json(j.at("train"), c.train);
  if (j.contains("eval")) from_json(j.at("eval"), c.eval);
  read(j, "data_path", c.data_path);
  read(j, "out_dir", c.out_dir);
}

RunConfig parse_run_config(const std::string& json_text) {
  Json j;
  try {
    j = Json::parse(json_text);
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  RunConfig c;
  from_json(j, c);
  c.validate();
  return c;
}

}  // namespace svp
