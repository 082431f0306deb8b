#include "sedenet/config.hpp"

#include <sstream>

#include "config_json.hpp"

using nlohmann::json;

namespace sedenet {

CliConfig parse_cli_config(const std::string& json_text) {
  json j = json::parse(json_text);
  detail::reject_unknown(j, {"model", "train", "data"}, "config");
  CliConfig cfg;
  if (j.contains("model")) {
    cfg.model = detail::model_config_from_json(j["model"], "model");
  }
  if (j.contains("train")) {
    cfg.train = detail::train_config_from_json(j["train"], "train");
  }
  if (j.contains("data")) {
    const json& d = j["data"];
    detail::reject_unknown(
        d, {"dir", "train_days", "val_days", "max_train_windows", "max_val_windows"},
        "data");
    if (d.contains("dir")) cfg.data.dir = d["dir"].get<std::string>();
    if (d.contains("train_days")) cfg.data.train_days = d["train_days"].get<std::vector<size_t>>();
    if (d.contains("val_days")) cfg.data.val_days = d["val_days"].get<std::vector<size_t>>();
    if (d.contains("max_train_windows")) cfg.data.max_train_windows = d["max_train_windows"].get<size_t>();
    if (d.contains("max_val_windows")) cfg.data.max_val_windows = d["max_val_windows"].get<size_t>();
  }
  return cfg;
}

std::string config_defaults_help() {
  const ModelConfig m;
  const TrainConfig t;
  std::ostringstream out;
  const auto list = [](const std::vector<size_t>& v) {
    std::ostringstream s;
    s << '[';
    for (size_t i = 0; i < v.size(); ++i) s << (i ? "," : "") << v[i];
    s << ']';
    return s.str();
  };
  out << "config keys (JSON, all optional; defaults shown):\n"
      << "  model.in_dynamic_channels    " << m.in_dynamic_channels << "\n"
      << "  model.in_static_channels     " << m.in_static_channels << "\n"
      << "  model.out_channels_per_frame " << m.out_channels_per_frame << "\n"
      << "  model.frames_in              " << m.frames_in << "\n"
      << "  model.frames_out             " << m.frames_out << "\n"
      << "  model.depth                  " << m.depth << "\n"
      << "  model.per_component_widths   " << list(m.per_component_widths) << "\n"
      << "  model.blocks_per_group       " << m.blocks_per_group << "\n"
      << "  model.upsample               \"" << m.upsample << "\"\n"
      << "  model.output_components      " << list(m.output_components) << "\n"
      << "  model.final_bias             " << (m.final_bias ? "true" : "false") << "\n"
      << "  train.lr_init                " << t.lr_init << "\n"
      << "  train.lr_floor               " << t.lr_floor << "\n"
      << "  train.lr_factor              " << t.lr_factor << "\n"
      << "  train.plateau_patience       " << t.plateau_patience << "\n"
      << "  train.plateau_min_delta      " << t.plateau_min_delta << "\n"
      << "  train.batch_size             " << t.batch_size << "\n"
      << "  train.max_epochs             " << t.max_epochs << "\n"
      << "  train.seed                   " << t.seed << "\n"
      << "  train.beta1                  " << t.beta1 << "\n"
      << "  train.beta2                  " << t.beta2 << "\n"
      << "  train.eps                    " << t.eps << "\n"
      << "  data.dir                     \"\" (usually given by --data)\n"
      << "  data.train_days              [] (manifest split)\n"
      << "  data.val_days                [] (manifest split)\n"
      << "  data.max_train_windows       0 (all)\n"
      << "  data.max_val_windows         0 (all)\n";
  return out.str();
}

}  // namespace sedenet
