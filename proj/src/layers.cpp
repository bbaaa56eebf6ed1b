#include "svp/layers.hpp"

#include <cmath>

#include "svp/errors.hpp"

namespace svp {

void check_last_dim(const torch::Tensor& t, int64_t dim, const char* what) {
  if (!t.defined() || t.dim() == 0 || t.size(-1) != dim)
    throw ShapeError(std::string(what) + ": expected last dimension " + std::to_string(dim) +
                     (t.defined() && t.dim() > 0 ? ", got " + std::to_string(t.size(-1)) : ""));
}

torch::Tensor sample_gaussian(const GaussianParams& p, const torch::Tensor& noise) {
  if (!noise.defined() || noise.sizes() != p.mean.sizes())
    throw ShapeError("sample_gaussian: noise shape does not match the distribution");
  return p.mean + p.scale * noise;
}

torch::Tensor positive_scale(const torch::Tensor& raw, double floor) {
  return torch::nn::functional::softplus(raw) + floor;
}

MlpImpl::MlpImpl(int64_t in, const std::vector<int64_t>& hidden, int64_t out) {
  int64_t prev = in;
  std::vector<int64_t> widths = hidden;
  widths.push_back(out);
  for (size_t i = 0; i < widths.size(); ++i) {
    layers_.push_back(register_module("fc" + std::to_string(i), torch::nn::Linear(prev, widths[i])));
    prev = widths[i];
  }
}

torch::Tensor MlpImpl::forward(torch::Tensor x) {
  for (size_t i = 0; i < layers_.size(); ++i) {
    x = layers_[i]->forward(x);
    if (i + 1 < layers_.size()) x = torch::leaky_relu(x, 0.2);
  }
  return x;
}

void MlpImpl::zero_final() {
  torch::NoGradGuard guard;
  layers_.back()->weight.zero_();
  layers_.back()->bias.zero_();
}

GaussianHeadImpl::GaussianHeadImpl(int64_t in, int64_t hidden, int64_t out, double scale_floor)
    : out_(out), floor_(scale_floor) {
  std::vector<int64_t> h;
  if (hidden > 0) h.push_back(hidden);
  mlp_ = register_module("mlp", Mlp(in, h, 2 * out));
}

GaussianParams GaussianHeadImpl::forward(const torch::Tensor& x) {
  auto raw = mlp_->forward(x);
  auto parts = raw.split(out_, -1);
  return {parts[0], positive_scale(parts[1], floor_)};
}

ResidualTransitionImpl::ResidualTransitionImpl(int64_t state_dim, int64_t cond_dim,
                                               std::vector<int64_t> hidden)
    : state_dim_(state_dim), cond_dim_(cond_dim) {
  mlp_ = register_module("mlp", Mlp(state_dim + cond_dim, hidden, state_dim));
  mlp_->zero_final();
}

torch::Tensor ResidualTransitionImpl::forward(const torch::Tensor& state, const torch::Tensor& cond) {
  check_last_dim(state, state_dim_, "residual transition state");
  check_last_dim(cond, cond_dim_, "residual transition input");
  return state + mlp_->forward(torch::cat({state, cond}, -1));
}

torch::Tensor sinusoidal_positions(int64_t length, int64_t width, int64_t offset,
                                   const torch::TensorOptions& opts) {
  auto pos = torch::arange(offset, offset + length, opts).unsqueeze(1);
  auto i = torch::arange(0, width, opts);
  // Pairs of channels share a frequency; even channels take sin, odd cos.
  auto freq = torch::exp(-std::log(10000.0) * (2 * torch::floor(i / 2)) / static_cast<double>(width));
  auto angle = pos * freq.unsqueeze(0);
  auto even = (torch::remainder(i, 2) == 0).unsqueeze(0);
  return torch::where(even, torch::sin(angle), torch::cos(angle));
}

TransformerStackImpl::TransformerStackImpl(int64_t width, int64_t heads, int64_t ffn, int64_t layers) {
  for (int64_t l = 0; l < layers; ++l) {
    auto opts = torch::nn::TransformerEncoderLayerOptions(width, heads)
                    .dim_feedforward(ffn)
                    .dropout(0.0)
                    .activation(torch::kGELU);
    layers_.push_back(
        register_module("layer" + std::to_string(l), torch::nn::TransformerEncoderLayer(opts)));
  }
}

torch::Tensor TransformerStackImpl::forward(torch::Tensor x) {
  // The layers take [L, B, E].
  x = x.transpose(0, 1);
  for (auto& layer : layers_) x = layer->forward(x);
  return x.transpose(0, 1);
}

}  // namespace svp
