#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "sedenet/data.hpp"

namespace fs = std::filesystem;

namespace {

struct RunResult {
  int exit_code;
  std::string output;
};

std::string work_dir() {
  static const std::string dir = [] {
    const fs::path p = fs::temp_directory_path() / "sedenet_cli_test";
    fs::remove_all(p);
    fs::create_directories(p);
    return p.string();
  }();
  return dir;
}

RunResult run_cli(const std::string& args) {
  static int counter = 0;
  const std::string out_file = work_dir() + "/out_" + std::to_string(counter++) + ".txt";
  const std::string cmd = std::string(SEDENET_CLI_PATH) + " " + args + " > " + out_file + " 2>&1";
  const int status = std::system(cmd.c_str());
  RunResult r;
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream f(out_file);
  r.output.assign((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return r;
}

std::string file_bytes(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  REQUIRE(f.good());
  return std::string((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
}

}  // namespace

TEST_CASE("table subcommand") {
  const RunResult small = run_cli("table --dim 2");
  CHECK(small.exit_code == 0);
  CHECK(small.output == "0 -1\n1 0\n");

  const RunResult verify = run_cli("table --dim 16 --verify");
  CHECK(verify.exit_code == 0);
  CHECK(verify.output.find("OK: 256/256 entries match") != std::string::npos);

  const RunResult bad = run_cli("table --dim 3");
  CHECK(bad.exit_code == 1);

  const RunResult missing = run_cli("table");
  CHECK(missing.exit_code == 1);
}

TEST_CASE("selftest passes") {
  const RunResult r = run_cli("selftest");
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("selftest passed") != std::string::npos);
}

TEST_CASE("gen determinism, layout and guard rails") {
  const std::string d1 = work_dir() + "/gen1";
  const std::string d2 = work_dir() + "/gen2";
  CHECK(run_cli("gen --out " + d1 + " --height 16 --width 16 --days 3 --seed 12").exit_code == 0);
  CHECK(run_cli("gen --out " + d2 + " --height 16 --width 16 --days 3 --seed 12").exit_code == 0);

  for (const char* name : {"manifest.json", "static.hxt", "day_0000.hxt", "day_0001.hxt",
                           "day_0002.hxt"}) {
    CHECK(fs::exists(d1 + "/" + name));
    CHECK(file_bytes(d1 + "/" + name) == file_bytes(d2 + "/" + name));
  }
  CHECK_FALSE(fs::exists(d1 + "/day_0003.hxt"));

  const RunResult bad_h = run_cli("gen --out " + work_dir() + "/gen3 --height 50 --width 16");
  CHECK(bad_h.exit_code == 1);
  CHECK(bad_h.output.find("height not divisible by 8") != std::string::npos);

  const RunResult clobber = run_cli("gen --out " + d1 + " --height 16 --width 16");
  CHECK(clobber.exit_code == 1);
  CHECK(run_cli("gen --out " + d1 + " --height 16 --width 16 --force").exit_code == 0);
}

TEST_CASE("end-to-end: gen, train, eval, predict") {
  const std::string data_dir = work_dir() + "/e2e_data";
  const std::string run_dir = work_dir() + "/e2e_run";
  REQUIRE(run_cli("gen --out " + data_dir + " --height 16 --width 16 --days 2 --seed 4")
              .exit_code == 0);

  const std::string cfg_path = work_dir() + "/cfg.json";
  std::ofstream(cfg_path) << R"({
    "model": {"depth": 1, "per_component_widths": [2, 2]},
    "train": {"max_epochs": 3, "batch_size": 4, "seed": 8},
    "data": {"max_train_windows": 8, "max_val_windows": 4}
  })";

  const RunResult train = run_cli("train --config " + cfg_path + " --data " + data_dir +
                                  " --out " + run_dir);
  CHECK(train.exit_code == 0);
  CHECK(train.output.find("model parameters:") != std::string::npos);
  CHECK(fs::exists(run_dir + "/metrics.csv"));
  CHECK(fs::exists(run_dir + "/best.hxck"));

  const RunResult eval = run_cli("eval --ckpt " + run_dir + "/best.hxck --data " + data_dir +
                                 " --split val");
  CHECK(eval.exit_code == 0);
  CHECK(eval.output.find("split,windows,mse") != std::string::npos);
  CHECK(eval.output.find("val,") != std::string::npos);

  const std::string pred_path = work_dir() + "/pred.hxt";
  const RunResult pred = run_cli("predict --ckpt " + run_dir + "/best.hxck --data " + data_dir +
                                 " --day 1 --t 100 --out " + pred_path);
  CHECK(pred.exit_code == 0);
  const sedenet::TensorU8 out = sedenet::load_tensor_u8(pred_path);
  CHECK(out.shape() == std::vector<size_t>{6, 8, 16, 16});

  // an untrained but finite model still evaluates to a finite positive MSE
  const RunResult eval_train_split = run_cli("eval --ckpt " + run_dir + "/best.hxck --data " +
                                             data_dir + " --split train");
  CHECK(eval_train_split.exit_code == 0);

  // unknown config keys are rejected
  const std::string bad_cfg = work_dir() + "/bad_cfg.json";
  std::ofstream(bad_cfg) << R"({"train": {"learning_rate": 0.1}})";
  const RunResult bad = run_cli("train --config " + bad_cfg + " --data " + data_dir +
                                " --out " + work_dir() + "/bad_run");
  CHECK(bad.exit_code == 1);
  CHECK(bad.output.find("unknown config key: train.learning_rate") != std::string::npos);
}

TEST_CASE("bench reports the exact 16x parameter ratio") {
  const RunResult timed = run_cli("bench --spec 16,16,3 --iters 2");
  CHECK(timed.exit_code == 0);
  CHECK(timed.output.find("36864,589824,16.0") != std::string::npos);

  const RunResult params_only = run_cli("bench --spec 4,8,3,16,16 --iters 0");
  CHECK(params_only.exit_code == 0);
  CHECK(params_only.output.find("4608,73728,16.0,,") != std::string::npos);
}

TEST_CASE("help enumerates config keys with defaults") {
  const RunResult help = run_cli("train --help");
  CHECK(help.exit_code == 0);
  CHECK(help.output.find("model.per_component_widths   [16,32,64,64]") != std::string::npos);
  CHECK(help.output.find("train.lr_init                0.0001") != std::string::npos);
  CHECK(help.output.find("train.plateau_patience       5") != std::string::npos);
  CHECK(help.output.find("data.max_train_windows") != std::string::npos);
}
