#include "svp/trainer.hpp"

#include <algorithm>
#include <cstring>

#include "svp/checkpoint.hpp"
#include "svp/errors.hpp"
#include "svp/metrics.hpp"

namespace svp {
namespace {

constexpr uint64_t kTrainStream = 0x747261696e;  // "train"
constexpr uint64_t kValStream = 0x76616c;        // "val"

using AdamState = torch::optim::AdamParamState;

}  // namespace

torch::Tensor sequence_tensor(const VideoDataset& ds, int64_t i) {
  if (i < 0 || i >= ds.n) throw ShapeError("sequence index out of range");
  auto seq = ds.sequence(i);
  return torch::from_blob(const_cast<float*>(seq.data()), {ds.t, ds.c, ds.h, ds.w},
                          torch::kFloat32)
      .clone();
}

Trainer::Trainer(RunConfig cfg) : cfg_(std::move(cfg)), rng_(Rng::derive(cfg_.seed, kTrainStream)) {
  cfg_.validate();
  torch::manual_seed(cfg_.seed);
  model_ = VideoModel(cfg_.model);
  optimizer_ = std::make_unique<torch::optim::Adam>(
      model_->parameters(), torch::optim::AdamOptions(cfg_.train.learning_rate));
}

LossWeights Trainer::effective_weights() const {
  LossWeights w = cfg_.train.weights;
  const int64_t warm = cfg_.train.kl_warmup_steps;
  if (warm > 0) {
    const double f = std::min(1.0, static_cast<double>(step_ + 1) / static_cast<double>(warm));
    w.kl_y1 *= f;
    w.kl_z_local *= f;
    w.kl_z1 *= f;
  }
  return w;
}

torch::Tensor Trainer::sample_batch(const VideoDataset& ds) {
  const int64_t len = cfg_.train.k + cfg_.train.horizon;
  if (ds.n <= 0) throw ShapeError("training dataset is empty");
  if (ds.t < len)
    throw ShapeError("training sequences have " + std::to_string(ds.t) + " frames; k + horizon = " +
                     std::to_string(len));
  if (ds.c != cfg_.model.channels || ds.h != cfg_.model.image_size || ds.w != cfg_.model.image_size)
    throw IncompatibleError("dataset frame shape does not match the model configuration");
  const int64_t b = cfg_.train.batch_size;
  auto out = torch::empty({b, len, ds.c, ds.h, ds.w}, torch::kFloat32);
  float* dst = out.data_ptr<float>();
  const int64_t chunk = len * ds.frame_size();
  for (int64_t i = 0; i < b; ++i) {
    const int64_t seq = rng_.index(ds.n);
    const int64_t start = cfg_.train.random_crop ? rng_.index(ds.t - len + 1) : 0;
    auto src = ds.frame(seq, start);
    std::memcpy(dst + i * chunk, src.data(), sizeof(float) * chunk);
  }
  return out;
}

LossBreakdown Trainer::training_step(const torch::Tensor& batch) {
  model_->train();
  const auto dtype = model_->parameters().front().scalar_type();
  auto x = batch.to(dtype);
  if (x.dim() != 5) throw ShapeError("training batch must be [B, T, C, H, W]");
  auto noise = draw_training_noise(rng_, cfg_.model, x.size(0), x.size(1), dtype);
  auto fwd = model_->forward_train(x, cfg_.train.k, cfg_.train.sigma_obs, noise);
  auto loss = assemble_loss(fwd.terms, effective_weights());
  optimizer_->zero_grad();
  loss.total.backward();
  if (cfg_.train.grad_clip > 0)
    torch::nn::utils::clip_grad_norm_(model_->parameters(), cfg_.train.grad_clip);
  optimizer_->step();
  ++step_;
  return loss.breakdown;
}

double Trainer::validation_psnr(const VideoDataset& ds) {
  const int64_t k = cfg_.train.k;
  const int64_t horizon = std::min(cfg_.train.horizon, ds.t - k);
  if (ds.n == 0 || horizon <= 0) throw ShapeError("validation sequences are too short");
  Rng rng = Rng::derive(cfg_.seed ^ static_cast<uint64_t>(step_), kValStream);
  const bool was_training = model_->is_training();
  model_->eval();
  double total = 0;
  for (int64_t i = 0; i < ds.n; ++i) {
    auto seq = sequence_tensor(ds, i);
    auto out = model_->rollout(seq.slice(0, 0, k).unsqueeze(0), horizon, rng);
    auto pred = out.frames.squeeze(0).to(torch::kFloat32);
    double s = 0;
    for (int64_t h = 0; h < horizon; ++h) s += psnr(seq[k + h], pred[h]);
    total += s / static_cast<double>(horizon);
  }
  if (was_training) model_->train();
  return total / static_cast<double>(ds.n);
}

void Trainer::train(const VideoDataset& data, int64_t steps, const TrainOptions& opts) {
  if (steps < 0) throw ConfigError("step count must be non-negative");
  const auto& tc = cfg_.train;
  for (int64_t i = 0; i < steps; ++i) {
    auto breakdown = training_step(sample_batch(data));
    Json record = breakdown.to_json();
    record["step"] = step_;
    if (opts.validation && tc.val_every > 0 && step_ % tc.val_every == 0)
      record["val_psnr"] = validation_psnr(*opts.validation);
    if (opts.metrics) *opts.metrics << record.dump() << '\n' << std::flush;
    if (opts.on_step) opts.on_step(step_, breakdown);
    if (!opts.checkpoint_path.empty() && tc.checkpoint_every > 0 && step_ % tc.checkpoint_every == 0)
      save(opts.checkpoint_path);
  }
  if (!opts.checkpoint_path.empty()) save(opts.checkpoint_path);
}

void Trainer::save(const std::string& path) const {
  CheckpointData data;
  data.config = cfg_;
  data.step = step_;
  data.rng_state = rng_.state();
  for (const auto& item : model_->named_parameters())
    data.tensors.emplace_back("param/" + item.key(), item.value());
  for (const auto& item : model_->named_buffers())
    data.tensors.emplace_back("buffer/" + item.key(), item.value());

  Json adam_steps = Json::object();
  auto& state = optimizer_->state();
  for (const auto& item : model_->named_parameters()) {
    auto it = state.find(item.value().unsafeGetTensorImpl());
    if (it == state.end()) continue;
    const auto& s = static_cast<const AdamState&>(*it->second);
    adam_steps[item.key()] = s.step();
    data.tensors.emplace_back("adam/" + item.key() + "/exp_avg", s.exp_avg());
    data.tensors.emplace_back("adam/" + item.key() + "/exp_avg_sq", s.exp_avg_sq());
  }
  data.extra["adam_steps"] = adam_steps;
  write_checkpoint(path, data);
}

Trainer Trainer::load(const std::string& path, const ModelConfig* expected) {
  auto data = read_checkpoint(path);
  RunConfig cfg;
  try {
    cfg = data.config.get<RunConfig>();
  } catch (const Json::exception& e) {
    throw IoError(std::string("checkpoint config snapshot is malformed: ") + e.what());
  }
  if (expected && !(cfg.model == *expected)) {
    std::string detail;
    if (cfg.model.mode != expected->mode)
      detail = " (checkpoint mode " + to_string(cfg.model.mode) + ", requested " +
               to_string(expected->mode) + ")";
    throw IncompatibleError("checkpoint model configuration does not match the requested one" +
                            detail);
  }

  Trainer tr(cfg);
  std::map<std::string, torch::Tensor> by_name;
  for (auto& [name, t] : data.tensors) by_name.emplace(name, t);
  auto take = [&](const std::string& name, const torch::Tensor& like) {
    auto it = by_name.find(name);
    if (it == by_name.end()) throw IncompatibleError("checkpoint lacks tensor '" + name + "'");
    if (it->second.sizes() != like.sizes())
      throw IncompatibleError("checkpoint tensor '" + name + "' has the wrong shape");
    return it->second.to(like.scalar_type());
  };

  {
    torch::NoGradGuard no_grad;
    for (auto& item : tr.model_->named_parameters())
      item.value().copy_(take("param/" + item.key(), item.value()));
    for (auto& item : tr.model_->named_buffers())
      item.value().copy_(take("buffer/" + item.key(), item.value()));
  }

  const Json steps = data.extra.value("adam_steps", Json::object());
  auto& state = tr.optimizer_->state();
  for (auto& item : tr.model_->named_parameters()) {
    if (!steps.contains(item.key())) continue;
    auto s = std::make_unique<AdamState>();
    s->step(steps.at(item.key()).get<int64_t>());
    s->exp_avg(take("adam/" + item.key() + "/exp_avg", item.value()).clone());
    s->exp_avg_sq(take("adam/" + item.key() + "/exp_avg_sq", item.value()).clone());
    state[item.value().unsafeGetTensorImpl()] = std::move(s);
  }
  tr.rng_.set_state(data.rng_state);
  tr.step_ = data.step;
  return tr;
}

}  // namespace svp
