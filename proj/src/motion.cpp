#include "svp/motion.hpp"

#include "svp/errors.hpp"

namespace svp {

PosteriorRecurrenceImpl::PosteriorRecurrenceImpl(const ModelConfig& cfg) : in_(cfg.d_h) {
  lstm_ = register_module(
      "lstm", torch::nn::LSTM(torch::nn::LSTMOptions(cfg.d_h, cfg.rnn_width).batch_first(true)));
}

torch::Tensor PosteriorRecurrenceImpl::forward(const torch::Tensor& h) {
  check_last_dim(h, in_, "posterior recurrence input");
  if (h.dim() != 3 || h.size(1) == 0)
    throw ShapeError("posterior recurrence needs a non-empty [B, T, d_h] sequence");
  return std::get<0>(lstm_->forward(h));
}

GlobalDynamicsImpl::GlobalDynamicsImpl(const ModelConfig& cfg)
    : pooling_(cfg.pooling), in_(cfg.d_h), width_(cfg.temporal_width) {
  proj_ = register_module("proj", torch::nn::Linear(cfg.d_h, cfg.temporal_width));
  summary_ = register_parameter("summary_token", torch::randn({1, 1, cfg.temporal_width}) * 0.02);
  stack_ = register_module("stack", TransformerStack(cfg.temporal_width, cfg.temporal_heads,
                                                     cfg.temporal_ffn, cfg.temporal_layers));
  norm_ = register_module("norm",
                          torch::nn::LayerNorm(torch::nn::LayerNormOptions({cfg.temporal_width})));
  head_ = register_module("head",
                          GaussianHead(cfg.temporal_width, cfg.head_hidden, cfg.d_g, cfg.scale_floor));
}

GaussianParams GlobalDynamicsImpl::forward(const torch::Tensor& h) {
  check_last_dim(h, in_, "global dynamics input");
  if (h.dim() != 3 || h.size(1) == 0)
    throw ShapeError("global dynamics needs a non-empty [B, L, d_h] sequence");
  const int64_t batch = h.size(0), length = h.size(1);
  auto x = proj_->forward(h) + sinusoidal_positions(length, width_, 1, h.options()).unsqueeze(0);
  x = torch::cat({summary_.expand({batch, 1, width_}), x}, 1);
  x = stack_->forward(x);
  auto pooled = pooling_ == Pooling::SummaryToken
                    ? x.select(1, 0)
                    : x.slice(1, 1).mean(1);
  return head_->forward(norm_->forward(pooled));
}

}  // namespace svp
