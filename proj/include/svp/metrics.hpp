#pragma once

#include <torch/torch.h>

namespace svp {

inline constexpr double kPsnrCap = 100.0;

// Peak 1.0; zero MSE returns kPsnrCap. Frames are [C, H, W].
double psnr(const torch::Tensor& x, const torch::Tensor& x_hat);
double psnr_from_mse(double mse);

// Gaussian-window SSIM (11x11, sigma 1.5, K1 = 0.01, K2 = 0.03, peak 1.0) over
// valid windows, averaged over windows and channels.
double ssim(const torch::Tensor& x, const torch::Tensor& x_hat);

}  // namespace svp
