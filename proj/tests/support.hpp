#pragma once

#include <atomic>
#include <filesystem>
#include <random>
#include <string>

#include <torch/torch.h>

#include "svp/config.hpp"

namespace svp::testing {

// Every latent and hidden width at most 4, 2x2 single-channel frames.
inline ModelConfig micro_config(Mode mode = Mode::Full) {
  ModelConfig c;
  c.image_size = 2;
  c.channels = 1;
  c.patch_size = 1;
  c.conv_blocks = 1;
  c.conv_channels = 2;
  c.d_h = 4;
  c.d_y = 3;
  c.d_z = 2;
  c.d_g = 2;
  c.d_w = 4;
  c.d_zw = 2;
  c.rnn_width = 4;
  c.appearance_rnn_width = 3;
  c.mlp_hidden = 4;
  c.head_hidden = 4;
  c.vit_layers = 1;
  c.vit_heads = 2;
  c.vit_ffn = 4;
  c.temporal_width = 4;
  c.temporal_heads = 2;
  c.temporal_layers = 1;
  c.temporal_ffn = 4;
  c.mode = mode;
  return c;
}

// Small but realistic 16x16 model for pipeline tests.
inline ModelConfig small_config(Mode mode = Mode::Full) {
  ModelConfig c;
  c.image_size = 16;
  c.patch_size = 4;
  c.conv_blocks = 2;
  c.conv_channels = 4;
  c.d_h = 16;
  c.d_y = 6;
  c.d_z = 4;
  c.d_g = 4;
  c.d_w = 8;
  c.d_zw = 4;
  c.rnn_width = 12;
  c.appearance_rnn_width = 8;
  c.mlp_hidden = 16;
  c.head_hidden = 16;
  c.vit_layers = 1;
  c.vit_heads = 2;
  c.vit_ffn = 16;
  c.temporal_width = 8;
  c.temporal_heads = 2;
  c.temporal_layers = 1;
  c.temporal_ffn = 16;
  c.mode = mode;
  return c;
}

inline RunConfig small_run(Mode mode = Mode::Full) {
  RunConfig r;
  r.seed = 5;
  r.model = small_config(mode);
  r.train.batch_size = 4;
  r.train.k = 3;
  r.train.horizon = 3;
  r.eval.k = 3;
  r.eval.horizon = 3;
  r.eval.n_samples = 2;
  return r;
}

// Re-draws every parameter from N(0, std^2) so no gradient path is dead.
inline void randomize(torch::nn::Module& m, uint64_t seed, double std = 0.4) {
  torch::NoGradGuard g;
  torch::manual_seed(seed);
  for (auto& p : m.parameters()) p.copy_(torch::randn_like(p) * std);
}

class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("svp_test_" + std::to_string(rd()) + "_" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  std::string file(const std::string& name) const { return (path_ / name).string(); }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace svp::testing
