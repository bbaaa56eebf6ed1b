#pragma once

#include <torch/torch.h>

#include "svp/config.hpp"
#include "svp/layers.hpp"

namespace svp {

// Causal LSTM over motion features: g_t depends on h^m_{1:t} only.
class PosteriorRecurrenceImpl : public torch::nn::Module {
 public:
  explicit PosteriorRecurrenceImpl(const ModelConfig& cfg);
  // [B, T, d_h] -> [B, T, rnn_width]
  torch::Tensor forward(const torch::Tensor& h);

 private:
  torch::nn::LSTM lstm_{nullptr};
  int64_t in_;
};
TORCH_MODULE(PosteriorRecurrence);

// Temporal transformer pooling a feature sequence of any length >= 1 into a
// Gaussian over the global dynamic z1. One instance serves both the
// posterior (full sequence) and the prior (conditioning frames).
class GlobalDynamicsImpl : public torch::nn::Module {
 public:
  explicit GlobalDynamicsImpl(const ModelConfig& cfg);
  // [B, L, d_h] -> Gaussian [B, d_g]
  GaussianParams forward(const torch::Tensor& h);

 private:
  torch::nn::Linear proj_{nullptr};
  torch::Tensor summary_;
  TransformerStack stack_{nullptr};
  torch::nn::LayerNorm norm_{nullptr};
  GaussianHead head_{nullptr};
  Pooling pooling_;
  int64_t in_, width_;
};
TORCH_MODULE(GlobalDynamics);

}  // namespace svp
