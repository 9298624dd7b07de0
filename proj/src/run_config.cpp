// Copyright 2026 The TriMLP Authors
// SPDX-License-Identifier: Apache-2.0

#include "trimlp/run_config.hpp"

#include <cstdio>
#include <set>

#include "trimlp/error.hpp"

namespace trimlp {

namespace {

const std::set<std::string> kModelKeys{"n",       "d",    "blocks", "sessions",
                                       "dropout", "variant", "combine", "axis",
                                       "vocab",   "layer_norm_eps"};
const std::set<std::string> kTrainKeys{"lr",         "adam_beta1", "adam_beta2",
                                       "adam_eps",   "batch",      "patience",
                                       "max_epochs", "seed",       "eval_metric",
                                       "eval_threads"};
const std::set<std::string> kPathKeys{"raw_data", "processed_dir",
                                      "checkpoint_dir", "results_path"};

template <typename T>
void read(const Json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("config key '") + key + "': " + e.what());
  }
}

void reject_unknown(const Json& j, const std::set<std::string>& allowed,
                    const char* section) {
  if (!j.is_object()) {
    throw ConfigError(std::string(section) + " config must be a JSON object");
  }
  for (const auto& [key, value] : j.items()) {
    if (!allowed.contains(key)) {
      throw ConfigError("unknown " + std::string(section) + " config key '" +
                        key + "'");
    }
  }
}

template <typename Enum, typename Parse>
void read_enum(const Json& j, const char* key, Enum& out, Parse parse,
               const char* valid) {
  if (!j.contains(key)) return;
  std::string name;
  read(j, key, name);
  const auto parsed = parse(name);
  if (!parsed) {
    throw ConfigError(std::string("unknown ") + key + " '" + name +
                      "' (valid: " + valid + ")");
  }
  out = *parsed;
}

}  // namespace

Json to_json(const ModelConfig& c) {
  return {{"n", c.n},
          {"d", c.d},
          {"blocks", c.blocks},
          {"sessions", c.sessions},
          {"dropout", c.dropout},
          {"variant", std::string(to_string(c.variant))},
          {"combine", std::string(to_string(c.combine))},
          {"axis", std::string(to_string(c.axis))},
          {"vocab", c.vocab},
          {"layer_norm_eps", c.layer_norm_eps}};
}

Json to_json(const TrainConfig& c) {
  return {{"lr", c.lr},
          {"adam_beta1", c.adam_beta1},
          {"adam_beta2", c.adam_beta2},
          {"adam_eps", c.adam_eps},
          {"batch", c.batch},
          {"patience", c.patience},
          {"max_epochs", c.max_epochs},
          {"seed", c.seed},
          {"eval_metric", c.eval_metric},
          {"eval_threads", c.eval_threads}};
}

ModelConfig model_config_from_json(const Json& j, ModelConfig c) {
  reject_unknown(j, kModelKeys, "model");
  read(j, "n", c.n);
  read(j, "d", c.d);
  read(j, "blocks", c.blocks);
  read(j, "sessions", c.sessions);
  read(j, "dropout", c.dropout);
  read_enum(j, "variant", c.variant, parse_variant, "full, eye, square, global, local");
  read_enum(j, "combine", c.combine, parse_combine, "add, concat, serial-gl, serial-lg");
  read_enum(j, "axis", c.axis, parse_axis, "source, target");
  read(j, "vocab", c.vocab);
  read(j, "layer_norm_eps", c.layer_norm_eps);
  return c;
}

TrainConfig train_config_from_json(const Json& j, TrainConfig c) {
  reject_unknown(j, kTrainKeys, "train");
  read(j, "lr", c.lr);
  read(j, "adam_beta1", c.adam_beta1);
  read(j, "adam_beta2", c.adam_beta2);
  read(j, "adam_eps", c.adam_eps);
  read(j, "batch", c.batch);
  read(j, "patience", c.patience);
  read(j, "max_epochs", c.max_epochs);
  read(j, "seed", c.seed);
  read(j, "eval_metric", c.eval_metric);
  read(j, "eval_threads", c.eval_threads);
  return c;
}

Json RunConfig::to_json() const {
  return {{"model", trimlp::to_json(model)},
          {"train", trimlp::to_json(train)},
          {"paths",
           {{"raw_data", paths.raw_data},
            {"processed_dir", paths.processed_dir},
            {"checkpoint_dir", paths.checkpoint_dir},
            {"results_path", paths.results_path}}},
          {"options", options}};
}

std::string RunConfig::hash() const {
  // Paths do not change results, so they stay out of the hash.
  Json j = to_json();
  j.erase("paths");
  return fnv1a_hex(canonical_dump(j));
}

RunConfig run_config_from_json(const Json& j, RunConfig base) {
  if (!j.is_object()) throw ConfigError("run config must be a JSON object");
  const bool sectioned = j.contains("model") || j.contains("train") ||
                         j.contains("paths") || j.contains("options");
  if (sectioned) {
    for (const auto& [key, value] : j.items()) {
      if (key != "model" && key != "train" && key != "paths" && key != "options") {
        throw ConfigError("unknown run config section '" + key + "'");
      }
    }
    if (j.contains("model")) base.model = model_config_from_json(j["model"], base.model);
    if (j.contains("train")) base.train = train_config_from_json(j["train"], base.train);
    if (j.contains("paths")) {
      const Json& p = j["paths"];
      reject_unknown(p, kPathKeys, "paths");
      read(p, "raw_data", base.paths.raw_data);
      read(p, "processed_dir", base.paths.processed_dir);
      read(p, "checkpoint_dir", base.paths.checkpoint_dir);
      read(p, "results_path", base.paths.results_path);
    }
    if (j.contains("options")) {
      if (!j["options"].is_object()) throw ConfigError("options must be an object");
      base.options.update(j["options"]);
    }
    return base;
  }
  Json model = Json::object(), train = Json::object(), paths = Json::object();
  for (const auto& [key, value] : j.items()) {
    if (kModelKeys.contains(key)) {
      model[key] = value;
    } else if (kTrainKeys.contains(key)) {
      train[key] = value;
    } else if (kPathKeys.contains(key)) {
      paths[key] = value;
    } else {
      throw ConfigError("unknown config key '" + key + "'");
    }
  }
  return run_config_from_json({{"model", model}, {"train", train}, {"paths", paths}},
                              std::move(base));
}

std::string canonical_dump(const Json& j) {
  // nlohmann::json objects are key-sorted maps, so dump() is canonical.
  return j.dump();
}

std::string fnv1a_hex(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace trimlp
