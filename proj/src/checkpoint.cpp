// Copyright 2026 The TriMLP Authors
// SPDX-License-Identifier: Apache-2.0

#include "trimlp/checkpoint.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "trimlp/error.hpp"

namespace trimlp {

namespace {

constexpr std::array<char, 8> kMagic{'T', 'R', 'I', 'M', 'L', 'P', 'C', 'K'};
// Refuses absurd header lengths from corrupt files before allocating.
constexpr std::uint64_t kMaxHeaderBytes = 64ULL << 20;

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>(v >> (8 * i)));
}

std::uint64_t get_u64(const unsigned char* p) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  return v;
}

std::string version_hint() {
  return "expected a TriMLP checkpoint with format_version " +
         std::to_string(kCheckpointFormatVersion);
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  Json manifest = Json::array();
  std::string payload;
  payload.reserve(ckpt.params.census() * 4);
  ckpt.params.for_each([&](const std::string& name, const Tensor<float>& t) {
    Json shape = Json::array();
    for (std::size_t i = 0; i < t.rank(); ++i) shape.push_back(t.dim(i));
    manifest.push_back({{"name", name}, {"shape", shape}, {"offset", payload.size()}});
    for (float v : t.values()) {
      const auto bits = std::bit_cast<std::uint32_t>(v);
      for (int i = 0; i < 4; ++i) payload.push_back(static_cast<char>(bits >> (8 * i)));
    }
  });
  const Json header = {{"format_version", kCheckpointFormatVersion},
                       {"config", to_json(ckpt.config)},
                       {"meta", ckpt.meta},
                       {"manifest", manifest}};
  const std::string text = header.dump();

  std::string blob(kMagic.begin(), kMagic.end());
  put_u64(blob, text.size());
  blob += text;
  blob += payload;

  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CheckpointError("cannot write checkpoint '" + path.string() + "'");
  out.write(blob.data(), static_cast<std::streamsize>(blob.size()));
  if (!out) throw CheckpointError("short write to checkpoint '" + path.string() + "'");
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint '" + path.string() + "'");
  const std::string blob((std::istreambuf_iterator<char>(in)),
                         std::istreambuf_iterator<char>());
  const auto* bytes = reinterpret_cast<const unsigned char*>(blob.data());

  if (blob.size() < 16 || std::memcmp(blob.data(), kMagic.data(), 8) != 0) {
    throw CheckpointError("'" + path.string() + "' has a bad header magic; " +
                          version_hint());
  }
  const std::uint64_t header_len = get_u64(bytes + 8);
  if (header_len > kMaxHeaderBytes || header_len > blob.size() - 16) {
    throw CheckpointError("'" + path.string() + "' has a truncated header; " +
                          version_hint());
  }
  Json header;
  try {
    header = Json::parse(blob.substr(16, header_len));
  } catch (const Json::exception&) {
    throw CheckpointError("'" + path.string() + "' has an unreadable JSON header; " +
                          version_hint());
  }
  if (!header.is_object() || !header.contains("format_version") ||
      !header["format_version"].is_number_integer()) {
    throw CheckpointError("'" + path.string() + "' header lacks format_version; " +
                          version_hint());
  }
  const int version = header["format_version"].get<int>();
  if (version != kCheckpointFormatVersion) {
    throw CheckpointError("'" + path.string() + "' has unsupported format_version " +
                          std::to_string(version) + "; " + version_hint());
  }

  Checkpoint ckpt;
  try {
    ckpt.config = model_config_from_json(header.at("config"));
    ckpt.meta = header.value("meta", Json::object());
    ckpt.config.validate();
  } catch (const Json::exception& e) {
    throw CheckpointError("checkpoint config: " + std::string(e.what()));
  } catch (const ConfigError& e) {
    throw CheckpointError("checkpoint config: " + std::string(e.what()));
  }

  // Allocate the expected layout, then fill it from the manifest.
  Rng unused(0);
  ckpt.params = init_params<float>(ckpt.config, unused);
  const std::size_t payload_start = 16 + header_len;
  const std::size_t payload_size = blob.size() - payload_start;
  const Json& manifest = header.at("manifest");
  std::size_t index = 0;
  ckpt.params.for_each([&](const std::string& name, Tensor<float>& t) {
    if (index >= manifest.size()) {
      throw CheckpointError("checkpoint manifest is missing tensor '" + name + "'");
    }
    const Json& entry = manifest[index++];
    std::vector<std::size_t> shape;
    std::size_t offset = 0;
    try {
      if (entry.at("name").get<std::string>() != name) {
        throw CheckpointError("checkpoint manifest entry " + std::to_string(index - 1) +
                              " is '" + entry.at("name").get<std::string>() +
                              "', expected '" + name + "'");
      }
      shape = entry.at("shape").get<std::vector<std::size_t>>();
      offset = entry.at("offset").get<std::size_t>();
    } catch (const Json::exception& e) {
      throw CheckpointError("checkpoint manifest entry for '" + name + "': " + e.what());
    }
    std::vector<std::size_t> expected;
    for (std::size_t i = 0; i < t.rank(); ++i) expected.push_back(t.dim(i));
    if (shape != expected) {
      throw CheckpointError("checkpoint tensor '" + name + "' has shape " +
                            Json(shape).dump() + ", config implies " + t.shape().str());
    }
    if (offset > payload_size || t.size() * 4 > payload_size - offset) {
      throw CheckpointError("checkpoint payload too short for tensor '" + name + "'");
    }
    const unsigned char* src = bytes + payload_start + offset;
    for (std::size_t i = 0; i < t.size(); ++i) {
      std::uint32_t bits = 0;
      for (int b = 0; b < 4; ++b) bits |= static_cast<std::uint32_t>(src[4 * i + b]) << (8 * b);
      t[i] = std::bit_cast<float>(bits);
    }
  });
  if (index != manifest.size()) {
    throw CheckpointError("checkpoint manifest has " + std::to_string(manifest.size()) +
                          " tensors, config implies " + std::to_string(index));
  }
  return ckpt;
}

}  // namespace trimlp
