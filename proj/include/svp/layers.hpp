#pragma once

#include <vector>

#include <torch/torch.h>

namespace svp {

// Diagonal Gaussian; scale is strictly positive by construction in every head.
struct GaussianParams {
  torch::Tensor mean;
  torch::Tensor scale;

  int64_t dim() const { return mean.size(-1); }
  GaussianParams detach() const { return {mean.detach(), scale.detach()}; }
  // Slice along a leading (time) dimension.
  GaussianParams select(int64_t dim, int64_t index) const {
    return {mean.select(dim, index), scale.select(dim, index)};
  }
};

// Reparameterised draw mean + scale * noise.
torch::Tensor sample_gaussian(const GaussianParams& p, const torch::Tensor& noise);

// softplus(raw) + floor
torch::Tensor positive_scale(const torch::Tensor& raw, double floor);

// Linear layers with LeakyReLU(0.2) between them (not after the last).
class MlpImpl : public torch::nn::Module {
 public:
  MlpImpl(int64_t in, const std::vector<int64_t>& hidden, int64_t out);
  torch::Tensor forward(torch::Tensor x);
  torch::nn::Linear& final_layer() { return layers_.back(); }
  void zero_final();

 private:
  std::vector<torch::nn::Linear> layers_;
};
TORCH_MODULE(Mlp);

// Maps a feature vector to a diagonal Gaussian of dimension `out`.
// hidden == 0 gives a single affine layer.
class GaussianHeadImpl : public torch::nn::Module {
 public:
  GaussianHeadImpl(int64_t in, int64_t hidden, int64_t out, double scale_floor);
  GaussianParams forward(const torch::Tensor& x);
  Mlp& mlp() { return mlp_; }
  int64_t out_dim() const { return out_; }

 private:
  Mlp mlp_{nullptr};
  int64_t out_;
  double floor_;
};
TORCH_MODULE(GaussianHead);

// state + MLP([state, cond]); the MLP's last layer starts at zero so a fresh
// transition is the identity.
class ResidualTransitionImpl : public torch::nn::Module {
 public:
  ResidualTransitionImpl(int64_t state_dim, int64_t cond_dim, std::vector<int64_t> hidden);
  torch::Tensor forward(const torch::Tensor& state, const torch::Tensor& cond);
  Mlp& mlp() { return mlp_; }
  int64_t state_dim() const { return state_dim_; }
  int64_t cond_dim() const { return cond_dim_; }

 private:
  Mlp mlp_{nullptr};
  int64_t state_dim_, cond_dim_;
};
TORCH_MODULE(ResidualTransition);

// Sinusoidal position table [length, width] for positions offset..offset+length-1.
torch::Tensor sinusoidal_positions(int64_t length, int64_t width, int64_t offset,
                                   const torch::TensorOptions& opts);

// Stack of post-norm self-attention layers over [B, L, E] inputs.
class TransformerStackImpl : public torch::nn::Module {
 public:
  TransformerStackImpl(int64_t width, int64_t heads, int64_t ffn, int64_t layers);
  torch::Tensor forward(torch::Tensor x);

 private:
  std::vector<torch::nn::TransformerEncoderLayer> layers_;
};
TORCH_MODULE(TransformerStack);

void check_last_dim(const torch::Tensor& t, int64_t dim, const char* what);

}  // namespace svp
