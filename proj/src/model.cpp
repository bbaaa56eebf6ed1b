#include "svp/model.hpp"

#include "svp/errors.hpp"

namespace svp {
namespace {

torch::Tensor batched(const torch::Tensor& t, int64_t rank) {
  return t.dim() == rank - 1 ? t.unsqueeze(0) : t;
}

GaussianParams stack_params(const std::vector<GaussianParams>& ps, int64_t dim) {
  std::vector<torch::Tensor> means, scales;
  for (const auto& p : ps) {
    means.push_back(p.mean);
    scales.push_back(p.scale);
  }
  return {torch::stack(means, dim), torch::stack(scales, dim)};
}

}  // namespace

TrainingNoise draw_training_noise(Rng& rng, const ModelConfig& cfg, int64_t batch, int64_t t,
                                  torch::Dtype dtype) {
  TrainingNoise n;
  n.y1 = rng.normal_tensor({batch, cfg.d_y}, dtype);
  if (cfg.mode != Mode::NoGlobal) n.z1 = rng.normal_tensor({batch, cfg.d_g}, dtype);
  n.z = rng.normal_tensor({batch, t - 1, cfg.d_z}, dtype);
  return n;
}

VideoModelImpl::VideoModelImpl(const ModelConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  const std::vector<int64_t> residual_hidden{cfg.mlp_hidden, cfg.mlp_hidden};
  motion_encoder_ = register_module("motion_encoder", MotionEncoder(cfg));
  appearance_encoder_ = register_module("appearance_encoder", AppearanceEncoder(cfg));
  posterior_rnn_ = register_module("posterior_rnn", PosteriorRecurrence(cfg));
  posterior_head_ = register_module(
      "posterior_head", GaussianHead(cfg.rnn_width, cfg.head_hidden, cfg.d_z, cfg.scale_floor));
  prior_head_ = register_module(
      "prior_head", GaussianHead(cfg.d_y, cfg.head_hidden, cfg.d_z, cfg.scale_floor));
  initial_head_ = register_module(
      "initial_head", GaussianHead(2 * cfg.d_h, cfg.head_hidden, cfg.d_y, cfg.scale_floor));
  if (has_global()) global_ = register_module("global_dynamics", GlobalDynamics(cfg));
  motion_transition_ = register_module(
      "motion_transition",
      ResidualTransition(cfg.d_y, cfg.d_z + (has_global() ? cfg.d_g : 0), residual_hidden));
  if (has_appearance_dynamics()) {
    appearance_rnn_ = register_module("appearance_rnn", AppearanceRecurrence(cfg));
    std::vector<int64_t> predictor_hidden;
    if (cfg.head_hidden > 0) predictor_hidden.push_back(cfg.head_hidden);
    appearance_predictor_ =
        register_module("appearance_predictor", Mlp(cfg.d_w, predictor_hidden, cfg.d_zw));
    appearance_transition_ = register_module("appearance_transition",
                                             ResidualTransition(cfg.d_w, cfg.d_zw, residual_hidden));
  }
  frame_decoder_ =
      register_module("frame_decoder", ConvDecoder(cfg, cfg.d_w + cfg.d_y, cfg.channels, true));
  flow_decoder_ = register_module("flow_decoder", ConvDecoder(cfg, cfg.rnn_width, 2, false));
}

torch::Tensor VideoModelImpl::encode_motion(const torch::Tensor& frames) {
  note("motion_encoder");
  return motion_encoder_->forward(frames);
}

torch::Tensor VideoModelImpl::encode_appearance(const torch::Tensor& frames) {
  note("appearance_encoder");
  return appearance_encoder_->forward(frames);
}

torch::Tensor VideoModelImpl::posterior_recurrence(const torch::Tensor& h) {
  note("posterior_recurrence");
  if (h.dim() == 2) return posterior_rnn_->forward(h.unsqueeze(0)).squeeze(0);
  return posterior_rnn_->forward(h);
}

GaussianParams VideoModelImpl::local_posterior(const torch::Tensor& g) {
  check_last_dim(g, cfg_.rnn_width, "local_posterior");
  note("local_posterior");
  return posterior_head_->forward(g);
}

GaussianParams VideoModelImpl::local_prior(const torch::Tensor& y_prev) {
  check_last_dim(y_prev, cfg_.d_y, "local_prior");
  note("local_prior");
  return prior_head_->forward(y_prev);
}

GaussianParams VideoModelImpl::initial_motion_posterior(const torch::Tensor& h1,
                                                        const torch::Tensor& h2) {
  if (!h1.defined() || !h2.defined())
    throw ShapeError("initial motion posterior needs two conditioning frames");
  check_last_dim(h1, cfg_.d_h, "initial_motion_posterior");
  check_last_dim(h2, cfg_.d_h, "initial_motion_posterior");
  note("initial_posterior");
  return initial_head_->forward(torch::cat({h1, h2}, -1));
}

GaussianParams VideoModelImpl::global_dynamics(const torch::Tensor& h) {
  if (!has_global()) throw ConfigError("model has no global dynamic (mode no_z1)");
  if (h.dim() == 2) {
    auto p = global_->forward(h.unsqueeze(0));
    return {p.mean.squeeze(0), p.scale.squeeze(0)};
  }
  return global_->forward(h);
}

torch::Tensor VideoModelImpl::motion_step(const torch::Tensor& y, const torch::Tensor& z_next,
                                          const torch::Tensor& z1) {
  if (!has_global()) throw ConfigError("motion_step needs z1; this model runs in no_z1 mode");
  check_last_dim(y, cfg_.d_y, "motion_step state");
  check_last_dim(z_next, cfg_.d_z, "motion_step local dynamic");
  check_last_dim(z1, cfg_.d_g, "motion_step global dynamic");
  return motion_transition_->forward(y, torch::cat({z_next, z1}, -1));
}

torch::Tensor VideoModelImpl::motion_step_no_global(const torch::Tensor& y,
                                                    const torch::Tensor& z_next) {
  if (has_global())
    throw ConfigError("motion_step_no_global is only available in no_z1 mode");
  check_last_dim(y, cfg_.d_y, "motion_step state");
  check_last_dim(z_next, cfg_.d_z, "motion_step local dynamic");
  return motion_transition_->forward(y, z_next);
}

torch::Tensor VideoModelImpl::advance_motion(const torch::Tensor& y, const torch::Tensor& z,
                                             const torch::Tensor& z1) {
  return has_global() ? motion_step(y, z, z1) : motion_step_no_global(y, z);
}

torch::Tensor VideoModelImpl::infer_appearance_transition(const torch::Tensor& hw) {
  if (!has_appearance_dynamics()) throw ConfigError("model has no appearance dynamics (mode no_w)");
  note("appearance_recurrence");
  if (hw.dim() == 2) return appearance_rnn_->forward(hw.unsqueeze(0)).squeeze(0);
  return appearance_rnn_->forward(hw);
}

torch::Tensor VideoModelImpl::predict_appearance_transition(const torch::Tensor& w) {
  if (!has_appearance_dynamics()) throw ConfigError("model has no appearance dynamics (mode no_w)");
  check_last_dim(w, cfg_.d_w, "predict_appearance_transition");
  note("appearance_predictor");
  return appearance_predictor_->forward(w);
}

torch::Tensor VideoModelImpl::appearance_step(const torch::Tensor& w, const torch::Tensor& zw) {
  if (!has_appearance_dynamics()) throw ConfigError("model has no appearance dynamics (mode no_w)");
  return appearance_transition_->forward(w, zw);
}

torch::Tensor VideoModelImpl::decode_frame(const torch::Tensor& w, const torch::Tensor& y) {
  check_last_dim(w, cfg_.d_w, "decode_frame appearance");
  check_last_dim(y, cfg_.d_y, "decode_frame motion");
  note("frame_decoder");
  return frame_decoder_->forward(torch::cat({w, y}, -1));
}

torch::Tensor VideoModelImpl::decode_flow(const torch::Tensor& g) {
  check_last_dim(g, cfg_.rnn_width, "decode_flow");
  note("flow_decoder");
  return flow_decoder_->forward(g);
}

TrainingForward VideoModelImpl::forward_train(const torch::Tensor& x, int64_t k, double sigma_obs,
                                              const TrainingNoise& noise) {
  if (x.dim() != 5) throw ShapeError("training input must be [B, T, C, H, W]");
  check_frames(x, cfg_.channels, cfg_.image_size);
  const int64_t batch = x.size(0), t = x.size(1);
  if (k < 2) throw ShapeError("k must be at least 2");
  if (t < k + 1) throw ShapeError("training sequences need at least k + 1 frames");

  TrainingForward out;
  auto& lat = out.latents;
  lat.h_motion = encode_motion(x);
  lat.g = posterior_recurrence(lat.h_motion);
  lat.q_z = local_posterior(lat.g.slice(1, 1));
  lat.q_y1 = initial_motion_posterior(lat.h_motion.select(1, 0), lat.h_motion.select(1, 1));

  note("sample_q_y1");
  auto y1 = sample_gaussian(lat.q_y1, noise.y1);
  if (has_global()) {
    note("global_posterior");
    lat.q_z1 = global_dynamics(lat.h_motion);
    note("global_prior");
    lat.p_z1 = global_dynamics(lat.h_motion.slice(1, 0, k));
    note("sample_q_z1");
    lat.z1 = sample_gaussian(lat.q_z1, noise.z1);
  }
  lat.z = sample_gaussian(lat.q_z, noise.z);

  std::vector<torch::Tensor> ys{y1};
  std::vector<GaussianParams> priors;
  for (int64_t s = 1; s < t; ++s) {
    note("sample_q_z:" + std::to_string(s + 1));
    priors.push_back(local_prior(ys.back()));
    ys.push_back(advance_motion(ys.back(), lat.z.select(1, s - 1), lat.z1));
  }
  lat.p_z = stack_params(priors, 1);
  lat.y = torch::stack(ys, 1);

  lat.h_appearance = encode_appearance(x);
  torch::Tensor appearance_l2;
  if (has_appearance_dynamics()) {
    lat.zw_tilde = infer_appearance_transition(lat.h_appearance);
    std::vector<torch::Tensor> ws{lat.h_appearance.select(1, 0)}, preds;
    for (int64_t s = 1; s < t; ++s) {
      preds.push_back(predict_appearance_transition(ws.back()));
      ws.push_back(appearance_step(ws.back(), lat.zw_tilde.select(1, s - 1)));
    }
    lat.w = torch::stack(ws, 1);
    lat.zw_pred = torch::stack(preds, 1);
    appearance_l2 = appearance_supervision_loss(lat.zw_pred, lat.zw_tilde.detach());
  } else {
    lat.w = lat.h_appearance.select(1, 0).unsqueeze(1).expand({batch, t, cfg_.d_w});
    appearance_l2 = torch::zeros({}, x.options());
  }

  const bool encoded = has_appearance_dynamics() &&
                       cfg_.appearance_source == AppearanceSource::Encoded;
  out.x_hat = decode_frame(encoded ? lat.h_appearance : lat.w, lat.y);
  out.flow = decode_flow(lat.g.slice(1, 1));
  note("warp");
  out.x_warped = warp(out.flow, x.slice(1, 0, t - 1));

  auto& terms = out.terms;
  terms.recon_nll = reconstruction_nll(out.x_hat, x, sigma_obs).sum(1).mean();
  terms.kl_y1 = kl_standard_normal(lat.q_y1).mean();
  terms.kl_z_local = gaussian_kl(lat.q_z, lat.p_z).sum(1).mean();
  if (has_global()) terms.kl_z1 = gaussian_kl(lat.q_z1, lat.p_z1).mean();
  terms.flow_l2 = flow_supervision_loss(out.x_warped, x.slice(1, 1));
  terms.appearance_l2 = appearance_l2;
  return out;
}

RolloutResult VideoModelImpl::rollout(const torch::Tensor& cond, int64_t horizon, Rng& rng,
                                      DecodeMask mask) {
  torch::NoGradGuard no_grad;
  if (cond.dim() != 5) throw ShapeError("conditioning frames must be [B, k, C, H, W]");
  check_frames(cond, cfg_.channels, cfg_.image_size);
  const int64_t batch = cond.size(0), k = cond.size(1);
  if (k < 2) throw ShapeError("rollout needs at least two conditioning frames");
  if (horizon <= 0) throw ShapeError("rollout horizon must be positive");
  const auto dtype = cond.scalar_type();

  auto hm = encode_motion(cond);
  auto q_y1 = initial_motion_posterior(hm.select(1, 0), hm.select(1, 1));
  note("sample_q_y1");
  std::vector<torch::Tensor> ys{sample_gaussian(q_y1, rng.normal_tensor({batch, cfg_.d_y}, dtype))};
  torch::Tensor z1;
  if (has_global()) {
    note("global_prior");
    auto p_z1 = global_dynamics(hm);
    note("sample_p_z1");
    z1 = sample_gaussian(p_z1, rng.normal_tensor({batch, cfg_.d_g}, dtype));
  }
  const bool posterior_window = cfg_.cond_latents == CondLatents::Posterior;
  torch::Tensor g;
  if (posterior_window) g = posterior_recurrence(hm);
  for (int64_t t = 2; t <= k + horizon; ++t) {
    GaussianParams dist;
    if (t <= k && posterior_window) {
      note("sample_q_z:" + std::to_string(t));
      dist = local_posterior(g.select(1, t - 1));
    } else {
      note("sample_p_z:" + std::to_string(t));
      dist = local_prior(ys.back());
    }
    auto z = sample_gaussian(dist, rng.normal_tensor({batch, cfg_.d_z}, dtype));
    ys.push_back(advance_motion(ys.back(), z, z1));
  }

  auto hw = encode_appearance(cond);
  std::vector<torch::Tensor> ws{hw.select(1, 0)};
  if (has_appearance_dynamics()) {
    auto observed = infer_appearance_transition(hw);
    for (int64_t t = 2; t <= k; ++t) ws.push_back(appearance_step(ws.back(), observed.select(1, t - 2)));
    for (int64_t t = k + 1; t <= k + horizon; ++t)
      ws.push_back(appearance_step(ws.back(), predict_appearance_transition(ws.back())));
  } else {
    ws.resize(static_cast<size_t>(k + horizon), ws.front());
  }

  RolloutResult out;
  out.y = torch::stack(ys, 1);
  out.w = torch::stack(ws, 1);
  auto w_future = out.w.slice(1, k);
  auto y_future = out.y.slice(1, k);
  if (mask == DecodeMask::MotionOnly) w_future = torch::zeros_like(w_future);
  if (mask == DecodeMask::AppearanceOnly) y_future = torch::zeros_like(y_future);
  out.frames = decode_frame(w_future, y_future);
  return out;
}

}  // namespace svp
