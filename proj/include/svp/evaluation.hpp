#pragma once

#include <optional>
#include <string>
#include <vector>

#include <torch/torch.h>

#include "svp/config.hpp"
#include "svp/datagen.hpp"
#include "svp/model.hpp"

namespace svp {

struct MeanCi {
  double mean = 0;
  double ci95 = 0;  // half-width, normal approximation
};

MeanCi mean_ci(const std::vector<double>& values);

struct SequenceMetrics {
  std::vector<double> psnr;  // per prediction step
  std::vector<double> ssim;
  double mean_psnr = 0;
  double mean_ssim = 0;
};

struct Curves {
  std::vector<double> psnr, psnr_ci, ssim, ssim_ci;
};

struct MetricReport {
  Aggregation aggregation = Aggregation::MeanOfN;
  int64_t n_samples = 0;
  int64_t k = 0;
  int64_t horizon = 0;
  Curves curves;                       // across sequences, per step
  std::vector<SequenceMetrics> sequences;
  MeanCi psnr, ssim;                   // over per-sequence means
  std::optional<Curves> baseline;      // copy-last-frame
  std::optional<std::vector<SequenceMetrics>> baseline_sequences;

  Json to_json() const;
  // Tab-separated per-step table: t, psnr, psnr_ci, ssim, ssim_ci[, baseline].
  std::string curves_table() const;
};

// Repeats the last conditioning frame. cond is [k, C, H, W].
torch::Tensor copy_last_frame_baseline(const torch::Tensor& cond, int64_t horizon);

// Per-step metrics of prediction [H, C, H, W] against truth [H, C, H, W].
SequenceMetrics score_sequence(const torch::Tensor& truth, const torch::Tensor& prediction);

// Draws n_samples rollouts per sequence and aggregates per cfg.aggregation.
// Parameters are only read.
MetricReport evaluate(VideoModel& model, const VideoDataset& ds, const EvalConfig& cfg);

}  // namespace svp
