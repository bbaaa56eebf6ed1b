#include "svp/encoders.hpp"

#include <algorithm>

#include "svp/errors.hpp"

namespace svp {
namespace {

std::vector<int64_t> leading_dims(const torch::Tensor& t, int64_t trailing) {
  auto sizes = t.sizes().vec();
  return {sizes.begin(), sizes.end() - trailing};
}

}  // namespace

void check_frames(const torch::Tensor& frames, int64_t channels, int64_t size) {
  if (!frames.defined() || frames.dim() < 3)
    throw ShapeError("frames must have shape [..., C, H, W]");
  const auto c = frames.size(-3), h = frames.size(-2), w = frames.size(-1);
  if (c != channels || h != size || w != size)
    throw ShapeError("frame shape [" + std::to_string(c) + ", " + std::to_string(h) + ", " +
                     std::to_string(w) + "] does not match configured [" +
                     std::to_string(channels) + ", " + std::to_string(size) + ", " +
                     std::to_string(size) + "]");
}

int64_t conv_block_channels(const ModelConfig& cfg, int64_t block) {
  return cfg.conv_channels << std::min<int64_t>(block, 3);
}

MotionEncoderImpl::MotionEncoderImpl(const ModelConfig& cfg)
    : channels_(cfg.channels), size_(cfg.image_size) {
  int64_t in = cfg.channels;
  for (int64_t b = 0; b < cfg.conv_blocks; ++b) {
    const int64_t out = conv_block_channels(cfg, b);
    convs_.push_back(register_module(
        "conv" + std::to_string(b),
        torch::nn::Conv2d(torch::nn::Conv2dOptions(in, out, 4).stride(2).padding(1))));
    in = out;
  }
  const int64_t side = cfg.image_size >> cfg.conv_blocks;
  proj_ = register_module("proj", torch::nn::Linear(in * side * side, cfg.d_h));
}

torch::Tensor MotionEncoderImpl::forward(const torch::Tensor& frames) {
  check_frames(frames, channels_, size_);
  auto lead = leading_dims(frames, 3);
  auto x = frames.reshape({-1, channels_, size_, size_});
  for (auto& conv : convs_) x = torch::leaky_relu(conv->forward(x), 0.2);
  x = proj_->forward(x.flatten(1));
  lead.push_back(x.size(-1));
  return x.reshape(lead);
}

AppearanceEncoderImpl::AppearanceEncoderImpl(const ModelConfig& cfg)
    : channels_(cfg.channels), size_(cfg.image_size), patch_(cfg.patch_size) {
  if (cfg.image_size % cfg.patch_size != 0)
    throw ConfigError("image size must be divisible by the patch size");
  const int64_t per_side = cfg.image_size / cfg.patch_size;
  num_patches_ = per_side * per_side;
  embed_ = register_module("embed",
                           torch::nn::Linear(cfg.channels * cfg.patch_size * cfg.patch_size, cfg.d_w));
  token_ = register_parameter("appearance_token", torch::randn({1, 1, cfg.d_w}) * 0.02);
  positions_ = register_parameter("positions", torch::randn({1, num_patches_ + 1, cfg.d_w}) * 0.02);
  stack_ = register_module("stack",
                           TransformerStack(cfg.d_w, cfg.vit_heads, cfg.vit_ffn, cfg.vit_layers));
  norm_ = register_module("norm", torch::nn::LayerNorm(torch::nn::LayerNormOptions({cfg.d_w})));
}

torch::Tensor AppearanceEncoderImpl::patchify(const torch::Tensor& x) const {
  const int64_t n = x.size(0), g = size_ / patch_;
  return x.reshape({n, channels_, g, patch_, g, patch_})
      .permute({0, 2, 4, 1, 3, 5})
      .reshape({n, g * g, channels_ * patch_ * patch_});
}

torch::Tensor AppearanceEncoderImpl::forward(const torch::Tensor& frames) {
  check_frames(frames, channels_, size_);
  auto lead = leading_dims(frames, 3);
  auto x = frames.reshape({-1, channels_, size_, size_});
  auto tokens = embed_->forward(patchify(x));
  tokens = torch::cat({token_.expand({x.size(0), 1, token_.size(-1)}), tokens}, 1) + positions_;
  auto out = norm_->forward(stack_->forward(tokens)).select(1, 0);
  lead.push_back(out.size(-1));
  return out.reshape(lead);
}

}  // namespace svp
