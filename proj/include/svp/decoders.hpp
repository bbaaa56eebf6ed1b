#pragma once

#include <torch/torch.h>

#include "svp/config.hpp"
#include "svp/layers.hpp"

namespace svp {

// Mirror of the motion encoder: projection to the coarsest feature map, then
// 4x4 stride-2 transposed convolutions up to the image size. The frame
// decoder ends in a sigmoid; the flow decoder emits raw displacements.
class ConvDecoderImpl : public torch::nn::Module {
 public:
  ConvDecoderImpl(const ModelConfig& cfg, int64_t in_dim, int64_t out_channels, bool sigmoid);
  // [..., in_dim] -> [..., out_channels, H, W]
  torch::Tensor forward(const torch::Tensor& z);
  void zero_final();
  int64_t in_dim() const { return in_; }

 private:
  torch::nn::Linear proj_{nullptr};
  std::vector<torch::nn::ConvTranspose2d> deconvs_;
  int64_t in_, base_channels_, base_size_;
  bool sigmoid_;
};
TORCH_MODULE(ConvDecoder);

// Backward bilinear warp. flow [..., 2, H, W] holds (dx, dy) in pixels;
// output(i, j) samples source at (i + dy, j + dx), coordinates clamped to the
// border. Differentiable in both flow and source.
torch::Tensor warp(const torch::Tensor& flow, const torch::Tensor& source);

// Sum over time of Euclidean norms of flattened frame differences, averaged
// over the batch. Inputs are [B, T', C, H, W].
torch::Tensor flow_supervision_loss(const torch::Tensor& warped, const torch::Tensor& target);

}  // namespace svp
