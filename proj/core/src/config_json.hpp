#pragma once

// JSON (de)serialization of the config structs, shared between the CLI
// config parser and checkpoint metadata. Internal to the library.

#include <stdexcept>
#include <string>

#include "json.hpp"
#include "sedenet/model.hpp"
#include "sedenet/train.hpp"

namespace sedenet::detail {

inline void reject_unknown(const nlohmann::json& j, std::initializer_list<const char*> keys,
                           const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool known = false;
    for (const char* k : keys) known = known || it.key() == k;
    if (!known) throw std::runtime_error("unknown config key: " + where + "." + it.key());
  }
}

inline nlohmann::json model_config_to_json(const ModelConfig& m) {
  nlohmann::json j;
  j["in_dynamic_channels"] = m.in_dynamic_channels;
  j["in_static_channels"] = m.in_static_channels;
  j["out_channels_per_frame"] = m.out_channels_per_frame;
  j["frames_in"] = m.frames_in;
  j["frames_out"] = m.frames_out;
  j["depth"] = m.depth;
  j["per_component_widths"] = m.per_component_widths;
  j["blocks_per_group"] = m.blocks_per_group;
  j["upsample"] = m.upsample;
  j["output_components"] = m.output_components;
  j["final_bias"] = m.final_bias;
  return j;
}

inline ModelConfig model_config_from_json(const nlohmann::json& j, const std::string& where) {
  reject_unknown(j,
                 {"in_dynamic_channels", "in_static_channels", "out_channels_per_frame",
                  "frames_in", "frames_out", "depth", "per_component_widths",
                  "blocks_per_group", "upsample", "output_components", "final_bias"},
                 where);
  ModelConfig m;
  if (j.contains("in_dynamic_channels")) m.in_dynamic_channels = j["in_dynamic_channels"].get<size_t>();
  if (j.contains("in_static_channels")) m.in_static_channels = j["in_static_channels"].get<size_t>();
  if (j.contains("out_channels_per_frame")) m.out_channels_per_frame = j["out_channels_per_frame"].get<size_t>();
  if (j.contains("frames_in")) m.frames_in = j["frames_in"].get<size_t>();
  if (j.contains("frames_out")) m.frames_out = j["frames_out"].get<size_t>();
  if (j.contains("depth")) m.depth = j["depth"].get<size_t>();
  if (j.contains("per_component_widths")) m.per_component_widths = j["per_component_widths"].get<std::vector<size_t>>();
  if (j.contains("blocks_per_group")) m.blocks_per_group = j["blocks_per_group"].get<size_t>();
  if (j.contains("upsample")) m.upsample = j["upsample"].get<std::string>();
  if (j.contains("output_components")) m.output_components = j["output_components"].get<std::vector<size_t>>();
  if (j.contains("final_bias")) m.final_bias = j["final_bias"].get<bool>();
  return m;
}

inline nlohmann::json train_config_to_json(const TrainConfig& t) {
  nlohmann::json j;
  j["lr_init"] = t.lr_init;
  j["lr_floor"] = t.lr_floor;
  j["lr_factor"] = t.lr_factor;
  j["plateau_patience"] = t.plateau_patience;
  j["plateau_min_delta"] = t.plateau_min_delta;
  j["batch_size"] = t.batch_size;
  j["max_epochs"] = t.max_epochs;
  j["seed"] = t.seed;
  j["beta1"] = t.beta1;
  j["beta2"] = t.beta2;
  j["eps"] = t.eps;
  return j;
}

inline TrainConfig train_config_from_json(const nlohmann::json& j, const std::string& where) {
  reject_unknown(j,
                 {"lr_init", "lr_floor", "lr_factor", "plateau_patience", "plateau_min_delta",
                  "batch_size", "max_epochs", "seed", "beta1", "beta2", "eps"},
                 where);
  TrainConfig t;
  if (j.contains("lr_init")) t.lr_init = j["lr_init"].get<double>();
  if (j.contains("lr_floor")) t.lr_floor = j["lr_floor"].get<double>();
  if (j.contains("lr_factor")) t.lr_factor = j["lr_factor"].get<double>();
  if (j.contains("plateau_patience")) t.plateau_patience = j["plateau_patience"].get<size_t>();
  if (j.contains("plateau_min_delta")) t.plateau_min_delta = j["plateau_min_delta"].get<double>();
  if (j.contains("batch_size")) t.batch_size = j["batch_size"].get<size_t>();
  if (j.contains("max_epochs")) t.max_epochs = j["max_epochs"].get<size_t>();
  if (j.contains("seed")) t.seed = j["seed"].get<uint64_t>();
  if (j.contains("beta1")) t.beta1 = j["beta1"].get<double>();
  if (j.contains("beta2")) t.beta2 = j["beta2"].get<double>();
  if (j.contains("eps")) t.eps = j["eps"].get<double>();
  return t;
}

}  // namespace sedenet::detail
