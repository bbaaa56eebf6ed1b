#pragma once

#include <optional>

#include <torch/torch.h>

#include "svp/config.hpp"
#include "svp/layers.hpp"

namespace svp {

// Closed-form KL(q || p) between diagonal Gaussians, summed over the last
// dimension. Throws on non-positive scales.
torch::Tensor gaussian_kl(const GaussianParams& q, const GaussianParams& p);

// KL(q || N(0, I)).
torch::Tensor kl_standard_normal(const GaussianParams& q);

// Gaussian negative log-density of x under N(x_hat, sigma_obs^2), summed over
// the trailing [C, H, W] dimensions.
torch::Tensor reconstruction_nll(const torch::Tensor& x_hat, const torch::Tensor& x,
                                 double sigma_obs);

// Batch-averaged scalar tensors. kl_z1 is undefined when the model has no
// global dynamic.
struct LossTerms {
  torch::Tensor recon_nll;
  torch::Tensor kl_y1;
  torch::Tensor kl_z_local;
  torch::Tensor kl_z1;
  torch::Tensor flow_l2;
  torch::Tensor appearance_l2;
};

struct LossBreakdown {
  double recon_nll = 0;
  double kl_y1 = 0;
  double kl_z_local = 0;
  std::optional<double> kl_z1;
  double flow_l2 = 0;
  double appearance_l2 = 0;
  double total = 0;

  Json to_json() const;
};

struct AssembledLoss {
  torch::Tensor total;
  LossBreakdown breakdown;
};

// total = recon + b1 kl_y1 + b2 kl_z_local + b3 kl_z1 + lf flow + lw appearance.
// Raises NumericError naming the first non-finite component.
AssembledLoss assemble_loss(const LossTerms& terms, const LossWeights& weights);

// Recomputes the weighted total from reported components.
double weighted_total(const LossBreakdown& b, const LossWeights& weights);

}  // namespace svp
