#pragma once

#include <string>
#include <vector>

#include "sedenet/model.hpp"
#include "sedenet/train.hpp"

namespace sedenet {

struct DataConfig {
  std::string dir;                 // usually supplied by the CLI flag
  std::vector<size_t> train_days;  // empty: use the manifest split
  std::vector<size_t> val_days;
  size_t max_train_windows = 0;  // 0: all windows
  size_t max_val_windows = 0;
};

struct CliConfig {
  ModelConfig model;
  TrainConfig train;
  DataConfig data;
};

/// Parses {"model": {...}, "train": {...}, "data": {...}}; every section and
/// key is optional, unknown keys are rejected with their path.
CliConfig parse_cli_config(const std::string& json_text);

/// One line per config key with its default, for --help output.
std::string config_defaults_help();

}  // namespace sedenet
