#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <torch/types.h>

namespace svp {

// Seeded random stream used for every stochastic decision outside parameter
// initialisation (batch sampling, reparameterisation noise, data generation).
// The full engine state round-trips through state()/set_state().
class Rng {
 public:
  explicit Rng(uint64_t seed = 0) : engine_(seed) {}

  uint64_t next_u64() { return engine_(); }
  // Uniform on [0, 1).
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  // Uniform integer on [0, n).
  int64_t index(int64_t n);
  // Box-Muller without a cached second value, so the stream position is the
  // only state.
  double normal();

  // Standard-normal tensor of the given shape and dtype.
  torch::Tensor normal_tensor(at::IntArrayRef shape,
                              torch::Dtype dtype = torch::kFloat32);

  std::string state() const;
  void set_state(const std::string& s);

  // Independent child stream, e.g. one per generated sequence.
  static Rng derive(uint64_t seed, uint64_t stream);

 private:
  std::mt19937_64 engine_;
};

}  // namespace svp
