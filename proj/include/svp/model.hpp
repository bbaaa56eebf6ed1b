#pragma once

#include <torch/torch.h>

#include "svp/appearance.hpp"
#include "svp/config.hpp"
#include "svp/decoders.hpp"
#include "svp/encoders.hpp"
#include "svp/layers.hpp"
#include "svp/motion.hpp"
#include "svp/objective.hpp"
#include "svp/rng.hpp"
#include "svp/trace.hpp"

namespace svp {

// Every latent of one training forward pass, batch-first.
struct LatentBundle {
  torch::Tensor h_motion;      // [B, T, d_h]
  torch::Tensor h_appearance;  // [B, T, d_w]
  torch::Tensor g;             // [B, T, rnn_width]

  GaussianParams q_y1;         // [B, d_y]
  torch::Tensor y;             // [B, T, d_y]; y[:, 0] is the y1 sample

  GaussianParams q_z1, p_z1;   // [B, d_g]; undefined without global dynamic
  torch::Tensor z1;

  GaussianParams q_z, p_z;     // [B, T-1, d_z] for t = 2..T
  torch::Tensor z;

  torch::Tensor w;             // [B, T, d_w]
  torch::Tensor zw_tilde;      // [B, T-1, d_zw]; undefined in NoAppearance mode
  torch::Tensor zw_pred;
};

struct TrainingForward {
  LatentBundle latents;
  torch::Tensor x_hat;     // [B, T, C, H, W]
  torch::Tensor flow;      // [B, T-1, 2, H, W]
  torch::Tensor x_warped;  // [B, T-1, C, H, W]
  LossTerms terms;
};

// Standard-normal noise consumed by one training forward pass.
struct TrainingNoise {
  torch::Tensor y1;  // [B, d_y]
  torch::Tensor z1;  // [B, d_g]
  torch::Tensor z;   // [B, T-1, d_z]
};

TrainingNoise draw_training_noise(Rng& rng, const ModelConfig& cfg, int64_t batch, int64_t t,
                                  torch::Dtype dtype = torch::kFloat32);

// Which latent reaches the frame decoder; the other is zeroed.
enum class DecodeMask { Joint, AppearanceOnly, MotionOnly };

struct RolloutResult {
  torch::Tensor frames;  // [B, horizon, C, H, W]
  torch::Tensor y;       // [B, k + horizon, d_y]
  torch::Tensor w;       // [B, k + horizon, d_w]
};

class VideoModelImpl : public torch::nn::Module {
 public:
  explicit VideoModelImpl(const ModelConfig& cfg);

  const ModelConfig& config() const { return cfg_; }

  torch::Tensor encode_motion(const torch::Tensor& frames);
  torch::Tensor encode_appearance(const torch::Tensor& frames);

  torch::Tensor posterior_recurrence(const torch::Tensor& h);
  GaussianParams local_posterior(const torch::Tensor& g);
  GaussianParams local_prior(const torch::Tensor& y_prev);
  GaussianParams initial_motion_posterior(const torch::Tensor& h1, const torch::Tensor& h2);
  GaussianParams global_dynamics(const torch::Tensor& h);
  torch::Tensor motion_step(const torch::Tensor& y, const torch::Tensor& z_next,
                            const torch::Tensor& z1);
  torch::Tensor motion_step_no_global(const torch::Tensor& y, const torch::Tensor& z_next);

  torch::Tensor infer_appearance_transition(const torch::Tensor& hw);
  torch::Tensor predict_appearance_transition(const torch::Tensor& w);
  torch::Tensor appearance_step(const torch::Tensor& w, const torch::Tensor& zw);

  torch::Tensor decode_frame(const torch::Tensor& w, const torch::Tensor& y);
  torch::Tensor decode_flow(const torch::Tensor& g);

  // Posterior-driven pass over x [B, T, C, H, W] (T >= k + 1, k >= 2).
  TrainingForward forward_train(const torch::Tensor& x, int64_t k, double sigma_obs,
                                const TrainingNoise& noise);

  // Prior-driven generation from cond [B, k, C, H, W]. Never touches the flow
  // decoder.
  RolloutResult rollout(const torch::Tensor& cond, int64_t horizon, Rng& rng,
                        DecodeMask mask = DecodeMask::Joint);

  // Module accessors; null where the configured mode drops the component.
  MotionEncoder& motion_encoder() { return motion_encoder_; }
  AppearanceEncoder& appearance_encoder() { return appearance_encoder_; }
  PosteriorRecurrence& posterior_rnn() { return posterior_rnn_; }
  GaussianHead& posterior_head() { return posterior_head_; }
  GaussianHead& prior_head() { return prior_head_; }
  GaussianHead& initial_head() { return initial_head_; }
  // Both z1 paths resolve to this single instance.
  GlobalDynamics& global_prior_module() { return global_; }
  GlobalDynamics& global_posterior_module() { return global_; }
  ResidualTransition& motion_transition() { return motion_transition_; }
  AppearanceRecurrence& appearance_rnn() { return appearance_rnn_; }
  Mlp& appearance_predictor() { return appearance_predictor_; }
  ResidualTransition& appearance_transition() { return appearance_transition_; }
  ConvDecoder& frame_decoder() { return frame_decoder_; }
  ConvDecoder& flow_decoder() { return flow_decoder_; }

  void set_trace(CallTrace* trace) { trace_ = trace; }

 private:
  void note(const std::string& e) {
    if (trace_) trace_->record(e);
  }
  bool has_global() const { return cfg_.mode != Mode::NoGlobal; }
  bool has_appearance_dynamics() const { return cfg_.mode != Mode::NoAppearance; }
  torch::Tensor advance_motion(const torch::Tensor& y, const torch::Tensor& z,
                               const torch::Tensor& z1);

  ModelConfig cfg_;
  MotionEncoder motion_encoder_{nullptr};
  AppearanceEncoder appearance_encoder_{nullptr};
  PosteriorRecurrence posterior_rnn_{nullptr};
  GaussianHead posterior_head_{nullptr};
  GaussianHead prior_head_{nullptr};
  GaussianHead initial_head_{nullptr};
  GlobalDynamics global_{nullptr};
  ResidualTransition motion_transition_{nullptr};
  AppearanceRecurrence appearance_rnn_{nullptr};
  Mlp appearance_predictor_{nullptr};
  ResidualTransition appearance_transition_{nullptr};
  ConvDecoder frame_decoder_{nullptr};
  ConvDecoder flow_decoder_{nullptr};
  CallTrace* trace_ = nullptr;
};
TORCH_MODULE(VideoModel);

}  // namespace svp
