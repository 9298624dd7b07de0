// Copyright 2026 The TriMLP Authors
// SPDX-License-Identifier: Apache-2.0
//
// JSON forms of the model/train configs and the merged run document.

#pragma once

#include <json.hpp>

#include <string>

#include "trimlp/model.hpp"
#include "trimlp/training.hpp"

namespace trimlp {

using Json = nlohmann::json;

Json to_json(const ModelConfig& cfg);
Json to_json(const TrainConfig& cfg);

// Keys present in `j` override `base`; unknown keys raise ConfigError.
ModelConfig model_config_from_json(const Json& j, ModelConfig base = {});
TrainConfig train_config_from_json(const Json& j, TrainConfig base = {});

struct RunPaths {
  std::string raw_data;
  std::string processed_dir;
  std::string checkpoint_dir;
  std::string results_path;
};

struct RunConfig {
  ModelConfig model;
  TrainConfig train;
  RunPaths paths;
  Json options = Json::object();  // command-specific settings

  Json to_json() const;
  // 16 hex digits of FNV-1a over the canonical serialization; stable under
  // key reordering.
  std::string hash() const;
};

// Accepts {"model": {...}, "train": {...}, "paths": {...}} or a flat object
// whose keys belong to either config.
RunConfig run_config_from_json(const Json& j, RunConfig base = {});

// Sorted keys, no whitespace.
std::string canonical_dump(const Json& j);
std::string fnv1a_hex(std::string_view bytes);

}  // namespace trimlp
