#include "svp/objective.hpp"

#include <cmath>
#include <numbers>

#include "svp/errors.hpp"

namespace svp {

torch::Tensor gaussian_kl(const GaussianParams& q, const GaussianParams& p) {
  if (q.mean.sizes() != p.mean.sizes() || q.scale.sizes() != q.mean.sizes() ||
      p.scale.sizes() != p.mean.sizes())
    throw ShapeError("gaussian_kl: distributions differ in shape");
  if ((q.scale <= 0).any().item<bool>() || (p.scale <= 0).any().item<bool>())
    throw NumericError("kl", "gaussian_kl: scales must be strictly positive");
  auto var_ratio = (q.scale / p.scale).pow(2);
  auto mean_term = ((q.mean - p.mean) / p.scale).pow(2);
  return (0.5 * (var_ratio + mean_term - 1) - torch::log(q.scale / p.scale)).sum(-1);
}

torch::Tensor kl_standard_normal(const GaussianParams& q) {
  return gaussian_kl(q, {torch::zeros_like(q.mean), torch::ones_like(q.scale)});
}

torch::Tensor reconstruction_nll(const torch::Tensor& x_hat, const torch::Tensor& x,
                                 double sigma_obs) {
  if (!(sigma_obs > 0)) throw NumericError("recon_nll", "sigma_obs must be positive");
  if (x_hat.sizes() != x.sizes()) throw ShapeError("reconstruction_nll: shapes differ");
  if (x.dim() < 3) throw ShapeError("reconstruction_nll expects [..., C, H, W]");
  const double log_norm = std::log(sigma_obs) + 0.5 * std::log(2 * std::numbers::pi);
  auto per_pixel = (x_hat - x).pow(2) / (2 * sigma_obs * sigma_obs) + log_norm;
  return per_pixel.sum({-3, -2, -1});
}

Json LossBreakdown::to_json() const {
  Json j{{"recon_nll", recon_nll},   {"kl_y1", kl_y1},
         {"kl_z_local", kl_z_local}, {"flow_l2", flow_l2},
         {"appearance_l2", appearance_l2}, {"total", total}};
  if (kl_z1) j["kl_z1"] = *kl_z1;
  return j;
}

AssembledLoss assemble_loss(const LossTerms& terms, const LossWeights& weights) {
  auto value = [](const torch::Tensor& t, const char* name) {
    if (!t.defined()) throw Error(std::string("loss term '") + name + "' was not computed");
    const double v = t.item<double>();
    if (!std::isfinite(v))
      throw NumericError(name, std::string("non-finite loss component '") + name + "'");
    return v;
  };
  AssembledLoss out;
  auto& b = out.breakdown;
  b.recon_nll = value(terms.recon_nll, "recon_nll");
  b.kl_y1 = value(terms.kl_y1, "kl_y1");
  b.kl_z_local = value(terms.kl_z_local, "kl_z_local");
  if (terms.kl_z1.defined()) b.kl_z1 = value(terms.kl_z1, "kl_z1");
  b.flow_l2 = value(terms.flow_l2, "flow_l2");
  b.appearance_l2 = value(terms.appearance_l2, "appearance_l2");

  out.total = terms.recon_nll + weights.kl_y1 * terms.kl_y1 +
              weights.kl_z_local * terms.kl_z_local + weights.flow * terms.flow_l2 +
              weights.appearance * terms.appearance_l2;
  if (terms.kl_z1.defined()) out.total = out.total + weights.kl_z1 * terms.kl_z1;
  b.total = value(out.total, "total");
  return out;
}

double weighted_total(const LossBreakdown& b, const LossWeights& w) {
  return b.recon_nll + w.kl_y1 * b.kl_y1 + w.kl_z_local * b.kl_z_local +
         w.kl_z1 * b.kl_z1.value_or(0.0) + w.flow * b.flow_l2 + w.appearance * b.appearance_l2;
}

}  // namespace svp
