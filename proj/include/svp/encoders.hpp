#pragma once

#include <torch/torch.h>

#include "svp/config.hpp"
#include "svp/layers.hpp"

namespace svp {

// Channel count of conv block i (encoder order); doubles per block, capped at 8x.
int64_t conv_block_channels(const ModelConfig& cfg, int64_t block);

// Strided conv stack (4x4 kernels, stride 2) followed by a flatten-projection.
// Maps each frame independently to h^m.
class MotionEncoderImpl : public torch::nn::Module {
 public:
  explicit MotionEncoderImpl(const ModelConfig& cfg);
  // [..., C, H, W] -> [..., d_h]; leading dims are flattened and restored.
  torch::Tensor forward(const torch::Tensor& frames);

 private:
  std::vector<torch::nn::Conv2d> convs_;
  torch::nn::Linear proj_{nullptr};
  int64_t channels_, size_;
};
TORCH_MODULE(MotionEncoder);

// Patch transformer with a learnable appearance token; the token's output
// position is the appearance feature h^w.
class AppearanceEncoderImpl : public torch::nn::Module {
 public:
  explicit AppearanceEncoderImpl(const ModelConfig& cfg);
  // [..., C, H, W] -> [..., d_w]
  torch::Tensor forward(const torch::Tensor& frames);
  int64_t token_count() const { return num_patches_ + 1; }
  const torch::Tensor& appearance_token() const { return token_; }

 private:
  torch::Tensor patchify(const torch::Tensor& x) const;

  torch::nn::Linear embed_{nullptr};
  torch::Tensor token_, positions_;
  TransformerStack stack_{nullptr};
  torch::nn::LayerNorm norm_{nullptr};
  int64_t channels_, size_, patch_, num_patches_;
};
TORCH_MODULE(AppearanceEncoder);

// Validates a [..., C, H, W] frame tensor against the configured image.
void check_frames(const torch::Tensor& frames, int64_t channels, int64_t size);

}  // namespace svp
