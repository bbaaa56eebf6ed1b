#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <torch/torch.h>

#include "svp/config.hpp"

namespace svp {

inline constexpr uint32_t kCheckpointVersion = 1;

// On-disk layout (little-endian):
//   "SVPCKPT\0" | u32 version | u64 header size | header JSON | tensor payload | u32 crc32
// The header carries the config snapshot, step, RNG state and a manifest of
// every tensor (name, dtype, shape, offset, byte count) in payload order.
struct CheckpointData {
  Json config;
  int64_t step = 0;
  std::string rng_state;
  std::vector<std::pair<std::string, torch::Tensor>> tensors;
  Json extra = Json::object();
};

void write_checkpoint(const std::string& path, const CheckpointData& data);

// Verifies size and checksum before decoding anything.
CheckpointData read_checkpoint(const std::string& path);

}  // namespace svp
