#pragma once

#include <cmath>
#include <random>
#include <vector>

namespace svp::testing {

struct McEstimate {
  double mean = 0;
  double stderr_ = 0;
};

// E_q[ln q(x) - ln p(x)] for diagonal Gaussians by direct sampling, without
// any closed form.
inline McEstimate monte_carlo_kl(const std::vector<double>& mq, const std::vector<double>& sq,
                                 const std::vector<double>& mp, const std::vector<double>& sp,
                                 int64_t samples, uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> normal;
  auto log_density = [](double x, double m, double s) {
    const double z = (x - m) / s;
    return -0.5 * z * z - std::log(s) - 0.5 * std::log(2 * M_PI);
  };
  double sum = 0, sum_sq = 0;
  for (int64_t n = 0; n < samples; ++n) {
    double v = 0;
    for (size_t d = 0; d < mq.size(); ++d) {
      const double x = mq[d] + sq[d] * normal(gen);
      v += log_density(x, mq[d], sq[d]) - log_density(x, mp[d], sp[d]);
    }
    sum += v;
    sum_sq += v * v;
  }
  McEstimate e;
  e.mean = sum / static_cast<double>(samples);
  const double var = sum_sq / static_cast<double>(samples) - e.mean * e.mean;
  e.stderr_ = std::sqrt(std::max(var, 0.0) / static_cast<double>(samples));
  return e;
}

}  // namespace svp::testing
