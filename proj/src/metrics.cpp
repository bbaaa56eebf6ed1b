#include "svp/metrics.hpp"

#include <cmath>

#include "svp/errors.hpp"

namespace svp {
namespace {

constexpr int64_t kWindow = 11;
constexpr double kSigma = 1.5;
constexpr double kC1 = 0.01 * 0.01;
constexpr double kC2 = 0.03 * 0.03;

void check_pair(const torch::Tensor& x, const torch::Tensor& x_hat) {
  if (x.sizes() != x_hat.sizes()) throw ShapeError("metric inputs differ in shape");
  if (x.dim() < 2) throw ShapeError("metric inputs must be at least [H, W]");
}

torch::Tensor gaussian_window() {
  auto r = torch::arange(kWindow, torch::kFloat64) - (kWindow - 1) / 2.0;
  auto g = torch::exp(-r * r / (2 * kSigma * kSigma));
  g = g / g.sum();
  return torch::outer(g, g).view({1, 1, kWindow, kWindow});
}

}  // namespace

double psnr_from_mse(double mse) {
  if (mse <= 0) return kPsnrCap;
  return std::min(kPsnrCap, -10.0 * std::log10(mse));
}

double psnr(const torch::Tensor& x, const torch::Tensor& x_hat) {
  check_pair(x, x_hat);
  auto d = x.to(torch::kFloat64) - x_hat.to(torch::kFloat64);
  return psnr_from_mse(d.pow(2).mean().item<double>());
}

double ssim(const torch::Tensor& x, const torch::Tensor& x_hat) {
  check_pair(x, x_hat);
  const int64_t h = x.size(-2), w = x.size(-1);
  if (h < kWindow || w < kWindow)
    throw ShapeError("SSIM needs images of at least 11x11 pixels");
  auto a = x.to(torch::kFloat64).reshape({-1, 1, h, w});
  auto b = x_hat.to(torch::kFloat64).reshape({-1, 1, h, w});
  static const torch::Tensor window = gaussian_window();
  auto filt = [&](const torch::Tensor& t) { return torch::conv2d(t, window); };
  auto mu_a = filt(a), mu_b = filt(b);
  auto var_a = filt(a * a) - mu_a * mu_a;
  auto var_b = filt(b * b) - mu_b * mu_b;
  auto cov = filt(a * b) - mu_a * mu_b;
  auto num = (2 * mu_a * mu_b + kC1) * (2 * cov + kC2);
  auto den = (mu_a * mu_a + mu_b * mu_b + kC1) * (var_a + var_b + kC2);
  return (num / den).mean().item<double>();
}

}  // namespace svp
