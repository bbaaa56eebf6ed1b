#include "svp/checkpoint.hpp"

#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>

#include <zlib.h>

#include "svp/errors.hpp"

namespace svp {
namespace {

constexpr char kMagic[8] = {'S', 'V', 'P', 'C', 'K', 'P', 'T', '\0'};

std::string dtype_name(torch::Dtype d) {
  switch (d) {
    case torch::kFloat32: return "f32";
    case torch::kFloat64: return "f64";
    case torch::kInt64: return "i64";
    default: throw IoError("unsupported tensor dtype in checkpoint");
  }
}

torch::Dtype dtype_from(const std::string& s) {
  if (s == "f32") return torch::kFloat32;
  if (s == "f64") return torch::kFloat64;
  if (s == "i64") return torch::kInt64;
  throw IoError("unknown tensor dtype '" + s + "' in checkpoint");
}

template <typename T>
void put(std::string& buf, T v) {
  buf.append(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(const std::string& buf, size_t& pos) {
  if (pos + sizeof(T) > buf.size()) throw IoError("checkpoint is truncated");
  T v;
  std::memcpy(&v, buf.data() + pos, sizeof(T));
  pos += sizeof(T);
  return v;
}

uint32_t crc_of(const char* data, size_t n) {
  uLong crc = crc32(0L, Z_NULL, 0);
  while (n > 0) {
    const auto chunk = static_cast<uInt>(std::min<size_t>(n, 1u << 30));
    crc = crc32(crc, reinterpret_cast<const Bytef*>(data), chunk);
    data += chunk;
    n -= chunk;
  }
  return static_cast<uint32_t>(crc);
}

}  // namespace

void write_checkpoint(const std::string& path, const CheckpointData& data) {
  Json manifest = Json::array();
  std::string payload;
  for (const auto& [name, tensor] : data.tensors) {
    auto t = tensor.detach().to(torch::kCPU).contiguous();
    const size_t bytes = t.numel() * t.element_size();
    manifest.push_back({{"name", name},
                        {"dtype", dtype_name(t.scalar_type())},
                        {"shape", t.sizes().vec()},
                        {"offset", payload.size()},
                        {"bytes", bytes}});
    payload.append(static_cast<const char*>(t.data_ptr()), bytes);
  }
  Json header = {{"config", data.config},
                 {"step", data.step},
                 {"rng", data.rng_state},
                 {"tensors", manifest},
                 {"extra", data.extra}};
  const std::string header_text = header.dump();

  std::string buf(kMagic, sizeof(kMagic));
  put<uint32_t>(buf, kCheckpointVersion);
  put<uint64_t>(buf, header_text.size());
  buf += header_text;
  buf += payload;
  put<uint32_t>(buf, crc_of(buf.data(), buf.size()));

  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + tmp.string() + "' for writing");
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!out) throw IoError("failed writing checkpoint '" + tmp.string() + "'");
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) throw IoError("cannot move checkpoint into place: " + ec.message());
}

CheckpointData read_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint '" + path + "'");
  std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  const size_t fixed = sizeof(kMagic) + 4 + 8;
  if (buf.size() < fixed + 4 || std::memcmp(buf.data(), kMagic, sizeof(kMagic)) != 0)
    throw IoError("'" + path + "' is not a checkpoint");
  size_t pos = sizeof(kMagic);
  const auto version = get<uint32_t>(buf, pos);
  if (version != kCheckpointVersion)
    throw VersionError("checkpoint format version " + std::to_string(version) +
                       " is not supported (expected " + std::to_string(kCheckpointVersion) + ")");
  const auto header_size = get<uint64_t>(buf, pos);
  if (header_size > buf.size() - fixed - 4) throw ChecksumError("checkpoint is truncated");

  const size_t body = buf.size() - 4;
  size_t crc_pos = body;
  const auto stored = get<uint32_t>(buf, crc_pos);
  if (stored != crc_of(buf.data(), body))
    throw ChecksumError("checkpoint '" + path + "' failed its checksum");

  Json header;
  try {
    header = Json::parse(buf.substr(pos, header_size));
  } catch (const Json::exception& e) {
    throw IoError(std::string("corrupt checkpoint header: ") + e.what());
  }
  const size_t payload_start = pos + header_size;
  const size_t payload_size = body - payload_start;

  CheckpointData out;
  try {
    out.config = header.at("config");
    out.step = header.at("step").get<int64_t>();
    out.rng_state = header.at("rng").get<std::string>();
    out.extra = header.value("extra", Json::object());
    for (const auto& entry : header.at("tensors")) {
      const auto offset = entry.at("offset").get<size_t>();
      const auto bytes = entry.at("bytes").get<size_t>();
      if (offset > payload_size || bytes > payload_size - offset)
        throw IoError("tensor manifest points outside the payload");
      auto shape = entry.at("shape").get<std::vector<int64_t>>();
      auto t = torch::empty(shape, torch::TensorOptions().dtype(dtype_from(entry.at("dtype"))));
      if (static_cast<size_t>(t.numel() * t.element_size()) != bytes)
        throw IoError("tensor manifest size mismatch");
      std::memcpy(t.data_ptr(), buf.data() + payload_start + offset, bytes);
      out.tensors.emplace_back(entry.at("name").get<std::string>(), std::move(t));
    }
  } catch (const Json::exception& e) {
    throw IoError(std::string("malformed checkpoint header: ") + e.what());
  }
  return out;
}

}  // namespace svp
