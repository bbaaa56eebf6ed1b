#include "svp/evaluation.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

#include "svp/errors.hpp"
#include "svp/metrics.hpp"
#include "svp/trainer.hpp"

namespace svp {
namespace {

double mean_of(const std::vector<double>& v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

Curves curves_of(const std::vector<SequenceMetrics>& seqs, int64_t horizon) {
  Curves c;
  for (int64_t h = 0; h < horizon; ++h) {
    std::vector<double> p, s;
    for (const auto& m : seqs) {
      p.push_back(m.psnr[h]);
      s.push_back(m.ssim[h]);
    }
    auto pc = mean_ci(p), sc = mean_ci(s);
    c.psnr.push_back(pc.mean);
    c.psnr_ci.push_back(pc.ci95);
    c.ssim.push_back(sc.mean);
    c.ssim_ci.push_back(sc.ci95);
  }
  return c;
}

Json curves_json(const Curves& c) {
  return {{"psnr", c.psnr}, {"psnr_ci95", c.psnr_ci}, {"ssim", c.ssim}, {"ssim_ci95", c.ssim_ci}};
}

Json sequences_json(const std::vector<SequenceMetrics>& seqs) {
  Json out = Json::array();
  for (const auto& m : seqs)
    out.push_back({{"psnr", m.psnr}, {"ssim", m.ssim}, {"mean_psnr", m.mean_psnr},
                   {"mean_ssim", m.mean_ssim}});
  return out;
}

}  // namespace

MeanCi mean_ci(const std::vector<double>& values) {
  MeanCi r;
  if (values.empty()) return r;
  r.mean = mean_of(values);
  if (values.size() > 1) {
    double ss = 0;
    for (double v : values) ss += (v - r.mean) * (v - r.mean);
    const double sd = std::sqrt(ss / static_cast<double>(values.size() - 1));
    r.ci95 = 1.96 * sd / std::sqrt(static_cast<double>(values.size()));
  }
  return r;
}

torch::Tensor copy_last_frame_baseline(const torch::Tensor& cond, int64_t horizon) {
  if (cond.dim() != 4 || cond.size(0) < 1) throw ShapeError("conditioning frames must be [k, C, H, W]");
  if (horizon <= 0) throw ShapeError("baseline horizon must be positive");
  return cond[cond.size(0) - 1].unsqueeze(0).expand({horizon, -1, -1, -1}).clone();
}

SequenceMetrics score_sequence(const torch::Tensor& truth, const torch::Tensor& prediction) {
  if (truth.sizes() != prediction.sizes() || truth.dim() != 4)
    throw ShapeError("truth and prediction must both be [H, C, H, W] with equal shapes");
  SequenceMetrics m;
  for (int64_t h = 0; h < truth.size(0); ++h) {
    m.psnr.push_back(psnr(truth[h], prediction[h]));
    m.ssim.push_back(ssim(truth[h], prediction[h]));
  }
  m.mean_psnr = mean_of(m.psnr);
  m.mean_ssim = mean_of(m.ssim);
  return m;
}

MetricReport evaluate(VideoModel& model, const VideoDataset& ds, const EvalConfig& cfg) {
  cfg.validate();
  const int64_t k = cfg.k, horizon = cfg.horizon, n = cfg.n_samples;
  if (ds.n <= 0) throw ShapeError("evaluation dataset is empty");
  if (ds.t < k + horizon)
    throw ShapeError("evaluation sequences have " + std::to_string(ds.t) +
                     " frames; k + horizon = " + std::to_string(k + horizon));
  const auto& mc = model->config();
  if (ds.c != mc.channels || ds.h != mc.image_size || ds.w != mc.image_size)
    throw IncompatibleError("dataset frames are " + std::to_string(ds.h) + "x" +
                            std::to_string(ds.w) + " but the model expects " +
                            std::to_string(mc.image_size) + "x" + std::to_string(mc.image_size));

  const bool was_training = model->is_training();
  model->eval();
  const auto dtype = model->parameters().front().scalar_type();
  Rng rng(cfg.seed);

  MetricReport report;
  report.aggregation = cfg.aggregation;
  report.n_samples = n;
  report.k = k;
  report.horizon = horizon;
  std::vector<SequenceMetrics> baseline;
  for (int64_t i = 0; i < ds.n; ++i) {
    auto seq = sequence_tensor(ds, i);
    auto cond = seq.slice(0, 0, k);
    auto truth = seq.slice(0, k, k + horizon);
    auto batch = cond.unsqueeze(0).expand({n, -1, -1, -1, -1}).contiguous().to(dtype);
    auto frames = model->rollout(batch, horizon, rng).frames.to(torch::kFloat32);

    std::vector<SequenceMetrics> samples;
    for (int64_t s = 0; s < n; ++s) samples.push_back(score_sequence(truth, frames[s]));
    SequenceMetrics agg;
    if (cfg.aggregation == Aggregation::BestOfN) {
      agg = *std::max_element(samples.begin(), samples.end(), [](const auto& a, const auto& b) {
        return a.mean_psnr < b.mean_psnr;
      });
    } else {
      agg.psnr.assign(horizon, 0.0);
      agg.ssim.assign(horizon, 0.0);
      for (const auto& s : samples)
        for (int64_t h = 0; h < horizon; ++h) {
          agg.psnr[h] += s.psnr[h] / static_cast<double>(n);
          agg.ssim[h] += s.ssim[h] / static_cast<double>(n);
        }
      agg.mean_psnr = mean_of(agg.psnr);
      agg.mean_ssim = mean_of(agg.ssim);
    }
    report.sequences.push_back(std::move(agg));
    if (cfg.baseline) baseline.push_back(score_sequence(truth, copy_last_frame_baseline(cond, horizon)));
  }
  if (was_training) model->train();

  report.curves = curves_of(report.sequences, horizon);
  std::vector<double> p, s;
  for (const auto& m : report.sequences) {
    p.push_back(m.mean_psnr);
    s.push_back(m.mean_ssim);
  }
  report.psnr = mean_ci(p);
  report.ssim = mean_ci(s);
  if (cfg.baseline) {
    report.baseline = curves_of(baseline, horizon);
    report.baseline_sequences = std::move(baseline);
  }
  return report;
}

Json MetricReport::to_json() const {
  Json j = {{"aggregation", aggregation == Aggregation::BestOfN ? "best" : "mean"},
            {"n_samples", n_samples},
            {"k", k},
            {"horizon", horizon},
            {"ci", "normal-approximation 95% interval over per-sequence means"},
            {"psnr", {{"mean", psnr.mean}, {"ci95", psnr.ci95}}},
            {"ssim", {{"mean", ssim.mean}, {"ci95", ssim.ci95}}},
            {"curves", curves_json(curves)},
            {"sequences", sequences_json(sequences)},
            {"lpips", nullptr}};
  if (baseline) {
    j["baseline"] = {{"name", "copy_last_frame"},
                     {"curves", curves_json(*baseline)},
                     {"sequences", sequences_json(*baseline_sequences)}};
  }
  return j;
}

std::string MetricReport::curves_table() const {
  std::ostringstream out;
  out.precision(10);
  out << "t\tpsnr\tpsnr_ci95\tssim\tssim_ci95";
  if (baseline) out << "\tbaseline_psnr\tbaseline_ssim";
  out << '\n';
  for (size_t h = 0; h < curves.psnr.size(); ++h) {
    out << (k + 1 + static_cast<int64_t>(h)) << '\t' << curves.psnr[h] << '\t' << curves.psnr_ci[h]
        << '\t' << curves.ssim[h] << '\t' << curves.ssim_ci[h];
    if (baseline) out << '\t' << baseline->psnr[h] << '\t' << baseline->ssim[h];
    out << '\n';
  }
  return out.str();
}

}  // namespace svp
