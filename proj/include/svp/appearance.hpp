#pragma once

#include <torch/torch.h>

#include "svp/config.hpp"
#include "svp/layers.hpp"

namespace svp {

// Causal LSTM over appearance features yielding the teacher transitions
// z~^w_t for t = 2..T.
class AppearanceRecurrenceImpl : public torch::nn::Module {
 public:
  explicit AppearanceRecurrenceImpl(const ModelConfig& cfg);
  // [B, T, d_w] (T >= 2) -> [B, T-1, d_zw]
  torch::Tensor forward(const torch::Tensor& hw);

 private:
  torch::nn::LSTM lstm_{nullptr};
  torch::nn::Linear out_{nullptr};
  int64_t in_;
};
TORCH_MODULE(AppearanceRecurrence);

// Sum over time of Euclidean norms, averaged over the batch. Inputs are
// [B, T', D]; pred and target must have equal shapes.
torch::Tensor appearance_supervision_loss(const torch::Tensor& z_pred,
                                          const torch::Tensor& z_tilde);

}  // namespace svp
