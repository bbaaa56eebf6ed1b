#include "svp/rng.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "svp/errors.hpp"

namespace svp {

double Rng::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

int64_t Rng::index(int64_t n) {
  if (n <= 0) throw Error("Rng::index needs a positive range");
  return static_cast<int64_t>(engine_() % static_cast<uint64_t>(n));
}

double Rng::normal() {
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

torch::Tensor Rng::normal_tensor(at::IntArrayRef shape, torch::Dtype dtype) {
  auto out = torch::empty(shape, torch::TensorOptions().dtype(torch::kFloat64));
  auto* p = out.data_ptr<double>();
  for (int64_t i = 0; i < out.numel(); ++i) p[i] = normal();
  return out.to(dtype);
}

std::string Rng::state() const {
  std::ostringstream os;
  os << engine_;
  return os.str();
}

void Rng::set_state(const std::string& s) {
  std::istringstream is(s);
  std::mt19937_64 e;
  is >> e;
  if (is.fail()) throw IoError("malformed RNG state");
  engine_ = e;
}

Rng Rng::derive(uint64_t seed, uint64_t stream) {
  std::seed_seq seq{static_cast<uint32_t>(seed), static_cast<uint32_t>(seed >> 32),
                    static_cast<uint32_t>(stream), static_cast<uint32_t>(stream >> 32),
                    0x5eedu};
  Rng r;
  r.engine_.seed(seq);
  return r;
}

}  // namespace svp
