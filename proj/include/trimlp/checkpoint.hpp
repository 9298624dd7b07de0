// Copyright 2026 The TriMLP Authors
// SPDX-License-Identifier: Apache-2.0
//
// Checkpoint container:
//   8 bytes   magic "TRIMLPCK"
//   8 bytes   header length H, little-endian uint64
//   H bytes   JSON {format_version, config, meta, manifest: [{name, shape, offset}]}
//   payload   little-endian float32 values, tensors in manifest order;
//             offset counts bytes from the start of the payload

#pragma once

#include <filesystem>

#include "trimlp/model.hpp"
#include "trimlp/run_config.hpp"

namespace trimlp {

inline constexpr int kCheckpointFormatVersion = 1;

struct Checkpoint {
  ModelConfig config;
  ModelParams<float> params;
  Json meta = Json::object();  // free-form run metadata
};

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);

// Throws CheckpointError on any malformed or mismatching content.
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace trimlp
