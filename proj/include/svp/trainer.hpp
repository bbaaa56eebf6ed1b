#pragma once

#include <functional>
#include <memory>
#include <ostream>
#include <string>

#include <torch/torch.h>

#include "svp/config.hpp"
#include "svp/datagen.hpp"
#include "svp/model.hpp"
#include "svp/objective.hpp"
#include "svp/rng.hpp"

namespace svp {

struct TrainOptions {
  const VideoDataset* validation = nullptr;
  std::ostream* metrics = nullptr;   // one JSON record per step
  std::string checkpoint_path;       // written every checkpoint_every steps and at the end
  std::function<void(int64_t step, const LossBreakdown&)> on_step;
};

// Owns the model parameters, optimiser state, random stream and step counter.
class Trainer {
 public:
  explicit Trainer(RunConfig cfg);

  // One posterior-driven forward pass, loss assembly and optimiser update on
  // x [B, T, C, H, W].
  LossBreakdown training_step(const torch::Tensor& batch);

  // Draws batch_size sequences (with replacement) and a random window of
  // k + horizon frames from each.
  torch::Tensor sample_batch(const VideoDataset& ds);

  void train(const VideoDataset& data, int64_t steps, const TrainOptions& opts = {});

  // Mean single-sample rollout PSNR over a dataset, using a stream derived
  // from the step so the training stream is untouched.
  double validation_psnr(const VideoDataset& ds);

  void save(const std::string& path) const;
  // Restores everything; when `expected` is given its model section must match
  // the snapshot.
  static Trainer load(const std::string& path, const ModelConfig* expected = nullptr);

  VideoModel& model() { return model_; }
  const RunConfig& config() const { return cfg_; }
  int64_t step() const { return step_; }
  Rng& rng() { return rng_; }
  // Weights after KL warmup at the current step.
  LossWeights effective_weights() const;

 private:
  RunConfig cfg_;
  VideoModel model_{nullptr};
  std::unique_ptr<torch::optim::Adam> optimizer_;
  Rng rng_;
  int64_t step_ = 0;
};

// Frames of sequence `i` as a [T, C, H, W] tensor (copied).
torch::Tensor sequence_tensor(const VideoDataset& ds, int64_t i);

}  // namespace svp
