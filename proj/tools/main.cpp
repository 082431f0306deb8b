// sedenet: sedenion-convolution traffic forecasting toolkit.
//
// Subcommands: table, selftest, gen, train, predict, eval, bench.
// Exit codes: 0 success, 1 runtime/usage error, 2 verification failure.

#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "sedenet/algebra.hpp"
#include "sedenet/config.hpp"
#include "sedenet/data.hpp"
#include "sedenet/layers.hpp"
#include "sedenet/model.hpp"
#include "sedenet/prng.hpp"
#include "sedenet/train.hpp"

using namespace sedenet;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitVerifyFailed = 2;

int run_table(int dim, bool verify) {
  const SignedIndexTable table = SignedIndexTable::cayley_dickson(dim);
  std::cout << table.to_text();
  if (!verify) return kExitOk;

  bool ok = true;
  if (!table.latin_square()) {
    std::cout << "FAIL: table is not a latin square in absolute index\n";
    ok = false;
  }
  if (dim == 16) {
    const SignedIndexTable& ref = SignedIndexTable::sedenion_reference();
    int matches = 0;
    for (int r = 0; r < 16; ++r) {
      for (int c = 0; c < 16; ++c) {
        if (table.index(r, c) == ref.index(r, c) && table.sign(r, c) == ref.sign(r, c)) {
          ++matches;
        } else {
          std::cout << "mismatch at (" << r << "," << c << "): generated "
                    << table.sign(r, c) * table.index(r, c) << " reference "
                    << ref.sign(r, c) * ref.index(r, c) << "\n";
          ok = false;
        }
      }
    }
    if (matches == 256) {
      std::cout << "OK: 256/256 entries match the built-in sedenion reference table\n";
    } else {
      std::cout << "FAIL: only " << matches << "/256 entries match\n";
    }
  } else {
    std::cout << "OK: latin-square and boundary structure verified\n";
  }
  return ok ? kExitOk : kExitVerifyFailed;
}

int run_selftest() {
  int failures = 0;
  const auto check = [&](bool ok, const std::string& what) {
    std::cout << (ok ? "ok: " : "FAIL: ") << what << "\n";
    if (!ok) ++failures;
  };

  const SignedIndexTable t16 = SignedIndexTable::cayley_dickson(16);
  const SignedIndexTable& ref = SignedIndexTable::sedenion_reference();
  check(t16 == ref, "generated table matches the transcribed reference (256 entries)");

  bool structure = true;
  for (int dim : {1, 2, 4, 8, 16}) {
    const SignedIndexTable t = SignedIndexTable::cayley_dickson(dim);
    structure = structure && t.latin_square();
    for (int c = 0; c < dim; ++c) {
      structure = structure && t.index(0, c) == c && t.sign(0, c) == (c == 0 ? 1 : -1);
    }
    for (int r = 0; r < dim; ++r) {
      structure = structure && t.index(r, 0) == r && t.sign(r, 0) == 1;
    }
  }
  check(structure, "latin-square rows/columns and boundary rows for every dim");

  bool units = true;
  for (int k = 1; k < 16; ++k) {
    const HyperNumber sq = hyper_mul(HyperNumber::unit(16, k), HyperNumber::unit(16, k), t16);
    units = units && sq[0] == -1.0;
    for (int i = 1; i < 16; ++i) units = units && sq[i] == 0.0;
  }
  check(units, "every imaginary unit squares to -1");

  bool anti = true;
  for (int i = 1; i < 16; ++i) {
    for (int j = 1; j < 16; ++j) {
      if (i == j) continue;
      const HyperNumber ab = hyper_mul(HyperNumber::unit(16, i), HyperNumber::unit(16, j), t16);
      const HyperNumber ba = hyper_mul(HyperNumber::unit(16, j), HyperNumber::unit(16, i), t16);
      for (int k = 0; k < 16; ++k) anti = anti && ab[k] == -ba[k];
    }
  }
  check(anti, "anti-commutativity on all distinct imaginary pairs");

  const HyperNumber l =
      hyper_mul(hyper_mul(HyperNumber::unit(16, 1), HyperNumber::unit(16, 2), t16),
                HyperNumber::unit(16, 4), t16);
  const HyperNumber r =
      hyper_mul(HyperNumber::unit(16, 1),
                hyper_mul(HyperNumber::unit(16, 2), HyperNumber::unit(16, 4), t16), t16);
  bool nonassoc = false;
  for (int k = 0; k < 16; ++k) nonassoc = nonassoc || l[k] != r[k];
  check(nonassoc, "non-associativity witness (e1 e2) e4 != e1 (e2 e4)");

  const auto zd16 = find_zero_divisor(t16);
  bool zd_ok = zd16.has_value();
  if (zd_ok) {
    const HyperNumber prod = hyper_mul(zd16->u, zd16->v, t16);
    for (int k = 0; k < 16; ++k) zd_ok = zd_ok && prod[k] == 0.0;
  }
  check(zd_ok, "zero-divisor pair found at dim 16 with exactly zero product");
  check(!find_zero_divisor(SignedIndexTable::cayley_dickson(8)).has_value(),
        "no zero divisors at dim 8");

  // sedenion convolution against the assembled block-matrix convolution
  Prng rng(1);
  bool conv_ok = true;
  for (int rep = 0; rep < 3; ++rep) {
    const size_t cg = 1 + static_cast<size_t>(rep % 2);
    const size_t k = rep == 0 ? 1 : 3;
    HxConvSpec spec{cg, cg, k, k, 1, k / 2, false};
    HxConvLayer layer(spec, rng);
    Tensor input({1, 16 * cg, 6, 6});
    for (size_t i = 0; i < input.size(); ++i) input[i] = rng.uniform_float(-1.0f, 1.0f);
    const Tensor got = layer.forward(input);
    const Conv2dSpec big{16 * cg, 16 * cg, k, k, 1, k / 2};
    const Tensor want = conv2d(input, layer.block_weight(), big);
    for (size_t i = 0; i < got.size(); ++i) {
      conv_ok = conv_ok && std::fabs(got[i] - want[i]) <= 1e-4f;
    }
  }
  check(conv_ok, "hxconv forward equals the explicit block-matrix convolution");

  bool ratio_ok = true;
  for (const HxConvSpec spec : {HxConvSpec{16, 16, 3, 3, 1, 1, false},
                                HxConvSpec{1, 1, 1, 1, 1, 0, false},
                                HxConvSpec{4, 8, 3, 3, 1, 1, false}}) {
    const size_t real = 16 * spec.comp_out * 16 * spec.comp_in * spec.kernel_h * spec.kernel_w;
    ratio_ok = ratio_ok && real == 16 * HxConvLayer::param_count(spec);
  }
  check(ratio_ok, "parameter count is exactly 1/16 of the dense real convolution");

  std::cout << (failures == 0 ? "selftest passed\n" : "selftest FAILED\n");
  return failures == 0 ? kExitOk : kExitVerifyFailed;
}

int run_gen(const std::string& out, size_t height, size_t width, size_t days,
            uint64_t seed, bool force) {
  const size_t div = size_t{1} << ModelConfig{}.depth;
  if (height % div != 0) throw std::runtime_error("height not divisible by " + std::to_string(div));
  if (width % div != 0) throw std::runtime_error("width not divisible by " + std::to_string(div));
  if (days == 0) throw std::runtime_error("need at least one day");

  GeneratorConfig gcfg;
  gcfg.height = height;
  gcfg.width = width;
  gcfg.num_days = days;
  gcfg.seed = seed;
  const ToyCity city = generate_toy_city(gcfg);

  DatasetManifest manifest;
  manifest.height = height;
  manifest.width = width;
  manifest.num_days = days;
  manifest.seed = seed;
  if (days >= 2) {
    for (size_t d = 0; d + 1 < days; ++d) manifest.train_days.push_back(d);
    manifest.val_days.push_back(days - 1);
  } else {
    manifest.train_days.push_back(0);
  }
  write_dataset(out, city, manifest, force);
  std::cout << "wrote " << days << " day files + static map + manifest to " << out << "\n";
  return kExitOk;
}

CliConfig load_cli_config(const std::string& path) {
  if (path.empty()) return CliConfig{};
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open config: " + path);
  std::stringstream buf;
  buf << f.rdbuf();
  return parse_cli_config(buf.str());
}

int run_train(const std::string& config_path, const std::string& data_dir,
              const std::string& out_dir) {
  CliConfig cfg = load_cli_config(config_path);
  const std::string dir = data_dir.empty() ? cfg.data.dir : data_dir;
  if (dir.empty()) throw std::runtime_error("no dataset directory (use --data or data.dir)");

  Dataset data = load_dataset(dir);
  if (!cfg.data.train_days.empty()) data.manifest.train_days = cfg.data.train_days;
  if (!cfg.data.val_days.empty()) data.manifest.val_days = cfg.data.val_days;
  const SplitPlan plan =
      make_split_plan(data, cfg.data.max_train_windows, cfg.data.max_val_windows);

  Prng rng(cfg.train.seed);
  SedUNet model(cfg.model, rng);
  std::cout << "model parameters: " << model.param_count() << "\n";
  std::cout << "train windows: " << plan.train.size() << ", val windows: " << plan.val.size()
            << "\n";
  std::cout << metrics_csv_header() << "\n";
  const FitResult result =
      fit(model, data, plan, cfg.train, out_dir, nullptr,
          [](const MetricsRow& row) { std::cout << metrics_csv_row(row) << "\n"; });
  std::cout << "best epoch " << result.best_epoch << " val_mse " << std::setprecision(10)
            << result.best_val << "\n";
  std::cout << "checkpoints: " << result.best_checkpoint << ", " << result.last_checkpoint
            << "\n";
  return kExitOk;
}

int run_predict(const std::string& ckpt_path, const std::string& data_dir, size_t day,
                size_t t, const std::string& out_path) {
  const Checkpoint ckpt = load_checkpoint(ckpt_path);
  Prng rng(0);
  SedUNet model(ckpt.meta.model, rng);
  restore_model(model, ckpt);

  const Dataset data = load_dataset(data_dir);
  if (day >= data.days.size()) throw std::runtime_error("day index out of range");
  const Sample sample = extract_window(data.days[day], make_window(t));

  const size_t h = data.manifest.height, w = data.manifest.width;
  Tensor static_in({1, 7, h, w});
  std::copy(data.static_chw.data(), data.static_chw.data() + data.static_chw.size(),
            static_in.data());
  std::vector<Tensor> frames;
  for (const Tensor& f : sample.frames) {
    Tensor b({1, 9, h, w});
    std::copy(f.data(), f.data() + f.size(), b.data());
    frames.push_back(std::move(b));
  }
  const Tensor out = model.forward(static_in, frames, /*train=*/false);
  const Tensor sel = select_outputs(out, model.config());
  Tensor squeezed({model.config().frames_out, model.config().out_channels_per_frame, h, w});
  std::copy(sel.data(), sel.data() + sel.size(), squeezed.data());
  save_tensor(out_path, denormalize_and_quantize(squeezed));
  std::cout << "wrote " << out_path << "\n";
  return kExitOk;
}

int run_eval(const std::string& ckpt_path, const std::string& data_dir,
             const std::string& split) {
  const Checkpoint ckpt = load_checkpoint(ckpt_path);
  Prng rng(0);
  SedUNet model(ckpt.meta.model, rng);
  restore_model(model, ckpt);

  const Dataset data = load_dataset(data_dir);
  const SplitPlan plan = make_split_plan(data);
  const std::vector<WindowRef>& windows = split == "train" ? plan.train : plan.val;
  const EvalResult ev = evaluate(model, data, windows, ckpt.meta.train.batch_size);

  std::cout << "split,windows,mse,mse_u8,h5,h10,h15,h30,h45,h60\n";
  std::cout << std::setprecision(10) << split << ',' << ev.windows << ',' << ev.overall << ','
            << ev.overall * 255.0 * 255.0;
  for (double h : ev.per_horizon) std::cout << ',' << h;
  std::cout << "\n";
  return kExitOk;
}

int run_bench(const std::string& spec_str, size_t iters) {
  std::vector<size_t> v;
  std::stringstream ss(spec_str);
  std::string item;
  while (std::getline(ss, item, ',')) v.push_back(std::stoul(item));
  if (v.size() == 3) {
    v.push_back(32);
    v.push_back(32);
  }
  if (v.size() != 5) throw std::runtime_error("--spec expects Ci,Co,k[,H,W]");
  const size_t ci = v[0], co = v[1], k = v[2], h = v[3], w = v[4];

  const HxConvSpec spec{ci, co, k, k, 1, k / 2, false};
  const size_t hx_params = HxConvLayer::param_count(spec);
  const size_t real_params = (16 * co) * (16 * ci) * k * k;
  const double ratio = static_cast<double>(real_params) / static_cast<double>(hx_params);

  std::string hx_ms, real_ms;
  if (iters > 0) {
    Prng rng(1);
    HxConvLayer layer(spec, rng);
    Tensor input({1, 16 * ci, h, w});
    for (size_t i = 0; i < input.size(); ++i) input[i] = rng.uniform_float(-1.0f, 1.0f);
    const Tensor big = layer.block_weight();
    const Conv2dSpec big_spec{16 * ci, 16 * co, k, k, 1, k / 2};

    const auto time_ms = [&](auto&& fn) {
      fn();  // warm up
      const auto t0 = std::chrono::steady_clock::now();
      for (size_t i = 0; i < iters; ++i) fn();
      const auto dt = std::chrono::duration<double, std::milli>(
                          std::chrono::steady_clock::now() - t0)
                          .count();
      return dt / static_cast<double>(iters);
    };
    std::ostringstream oss;
    oss << std::setprecision(6) << time_ms([&] { volatile float sink = layer.forward(input)[0]; (void)sink; });
    hx_ms = oss.str();
    oss.str("");
    oss << std::setprecision(6)
        << time_ms([&] { volatile float sink = conv2d(input, big, big_spec)[0]; (void)sink; });
    real_ms = oss.str();
  }

  std::cout << "ci,co,kernel,h,w,iters,hx_params,real_params,param_ratio,hx_ms_per_forward,"
               "real_ms_per_forward\n";
  std::cout << ci << ',' << co << ',' << k << ',' << h << ',' << w << ',' << iters << ','
            << hx_params << ',' << real_params << ',' << std::fixed << std::setprecision(1)
            << ratio << ',' << hx_ms << ',' << real_ms << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sedenion-convolution traffic forecasting toolkit"};
  app.require_subcommand(1);

  int table_dim = 16;
  bool table_verify = false;
  CLI::App* table = app.add_subcommand("table", "print a hypercomplex multiplication table");
  table->add_option("--dim", table_dim, "algebra dimension (1,2,4,8,16)")->required();
  table->add_flag("--verify", table_verify,
                  "check structure; at dim 16, compare against the built-in reference");

  CLI::App* selftest =
      app.add_subcommand("selftest", "run the algebra and convolution oracle suite");

  std::string gen_out;
  size_t gen_h = 16, gen_w = 16, gen_days = 3;
  uint64_t gen_seed = 0;
  bool gen_force = false;
  CLI::App* gen = app.add_subcommand("gen", "generate a synthetic toy-city dataset");
  gen->add_option("--out", gen_out, "output directory")->required();
  gen->add_option("--height", gen_h, "grid height (divisible by 8)");
  gen->add_option("--width", gen_w, "grid width (divisible by 8)");
  gen->add_option("--days", gen_days, "number of day files");
  gen->add_option("--seed", gen_seed, "generator seed");
  gen->add_flag("--force", gen_force, "overwrite a non-empty directory");

  std::string train_config, train_data, train_out;
  CLI::App* train = app.add_subcommand("train", "train a model on a dataset directory");
  train->add_option("--config", train_config, "JSON config file");
  train->add_option("--data", train_data, "dataset directory");
  train->add_option("--out", train_out, "output directory for checkpoints + metrics")
      ->required();
  train->footer(config_defaults_help());

  std::string pred_ckpt, pred_data, pred_out;
  size_t pred_day = 0, pred_t = 0;
  CLI::App* predict = app.add_subcommand("predict", "write one window's prediction as u8");
  predict->add_option("--ckpt", pred_ckpt, "checkpoint file")->required();
  predict->add_option("--data", pred_data, "dataset directory")->required();
  predict->add_option("--day", pred_day, "day index");
  predict->add_option("--t", pred_t, "window start frame");
  predict->add_option("--out", pred_out, "output .hxt path")->required();

  std::string eval_ckpt, eval_data, eval_split = "val";
  CLI::App* evalc = app.add_subcommand("eval", "evaluate a checkpoint on a split");
  evalc->add_option("--ckpt", eval_ckpt, "checkpoint file")->required();
  evalc->add_option("--data", eval_data, "dataset directory")->required();
  evalc->add_option("--split", eval_split, "val or train")
      ->check(CLI::IsMember({"val", "train"}));

  std::string bench_spec = "16,16,3,32,32";
  size_t bench_iters = 10;
  CLI::App* bench = app.add_subcommand("bench", "parameter counts and forward timings");
  bench->add_option("--spec", bench_spec, "Ci,Co,k[,H,W]");
  bench->add_option("--iters", bench_iters, "timing iterations (0: parameters only)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitError;
  }

  try {
    if (table->parsed()) return run_table(table_dim, table_verify);
    if (selftest->parsed()) return run_selftest();
    if (gen->parsed()) return run_gen(gen_out, gen_h, gen_w, gen_days, gen_seed, gen_force);
    if (train->parsed()) return run_train(train_config, train_data, train_out);
    if (predict->parsed()) return run_predict(pred_ckpt, pred_data, pred_day, pred_t, pred_out);
    if (evalc->parsed()) return run_eval(eval_ckpt, eval_data, eval_split);
    if (bench->parsed()) return run_bench(bench_spec, bench_iters);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
  return kExitError;
}
