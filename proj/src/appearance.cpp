#include "svp/appearance.hpp"

#include "svp/errors.hpp"

namespace svp {

AppearanceRecurrenceImpl::AppearanceRecurrenceImpl(const ModelConfig& cfg) : in_(cfg.d_w) {
  lstm_ = register_module(
      "lstm",
      torch::nn::LSTM(torch::nn::LSTMOptions(cfg.d_w, cfg.appearance_rnn_width).batch_first(true)));
  out_ = register_module("out", torch::nn::Linear(cfg.appearance_rnn_width, cfg.d_zw));
}

torch::Tensor AppearanceRecurrenceImpl::forward(const torch::Tensor& hw) {
  check_last_dim(hw, in_, "appearance recurrence input");
  if (hw.dim() != 3 || hw.size(1) < 2)
    throw ShapeError("appearance recurrence needs at least two frames");
  auto states = std::get<0>(lstm_->forward(hw));
  // Output at position t (0-based) summarises h^w_{1..t+1}; transitions exist for t >= 1.
  return out_->forward(states.slice(1, 1));
}

torch::Tensor appearance_supervision_loss(const torch::Tensor& z_pred, const torch::Tensor& z_tilde) {
  if (z_pred.sizes() != z_tilde.sizes())
    throw ShapeError("appearance supervision: prediction and target lengths differ");
  if (z_pred.dim() != 3) throw ShapeError("appearance supervision expects [B, T, D]");
  return (z_tilde - z_pred).norm(2, -1).sum(1).mean();
}

}  // namespace svp
