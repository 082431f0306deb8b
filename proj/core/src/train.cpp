#include "sedenet/train.hpp"

#include <chrono>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

#include "config_json.hpp"
#include "sedenet/prng.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace sedenet {

void validate_config(const TrainConfig& cfg) {
  if (cfg.lr_floor > cfg.lr_init) throw std::invalid_argument("lr_floor must be <= lr_init");
  if (!(cfg.lr_factor > 0.0 && cfg.lr_factor < 1.0)) {
    throw std::invalid_argument("lr_factor must lie in (0,1)");
  }
  if (cfg.plateau_patience == 0) throw std::invalid_argument("plateau_patience must be >= 1");
  if (cfg.batch_size == 0) throw std::invalid_argument("batch_size must be >= 1");
  if (!(cfg.beta1 >= 0.0 && cfg.beta1 < 1.0 && cfg.beta2 >= 0.0 && cfg.beta2 < 1.0)) {
    throw std::invalid_argument("adam betas must lie in [0,1)");
  }
  if (cfg.eps <= 0.0) throw std::invalid_argument("adam eps must be positive");
}

MseResult mse_loss(const Tensor& pred, const Tensor& target) {
  if (!pred.same_shape(target)) throw std::invalid_argument("mse_loss shape mismatch");
  const size_t n = pred.size();
  MseResult r;
  r.grad = Tensor(pred.shape());
  double acc = 0.0;
  const float scale = 2.0f / static_cast<float>(n);
  for (size_t i = 0; i < n; ++i) {
    const double d = static_cast<double>(pred[i]) - static_cast<double>(target[i]);
    acc += d * d;
    r.grad[i] = scale * static_cast<float>(d);
  }
  r.value = acc / static_cast<double>(n);
  return r;
}

// ---- Adam ----

Adam::Adam(double beta1, double beta2, double eps)
    : beta1_(beta1), beta2_(beta2), eps_(eps) {}

void Adam::step(const std::vector<ParamRef>& params, double lr) {
  if (m_.empty()) {
    m_.reserve(params.size());
    v_.reserve(params.size());
    for (const ParamRef& p : params) {
      m_.emplace_back(p.value->shape());
      v_.emplace_back(p.value->shape());
    }
  }
  if (m_.size() != params.size()) {
    throw std::logic_error("adam moment buffers do not match parameter list");
  }
  ++step_;
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(step_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(step_));
  for (size_t i = 0; i < params.size(); ++i) {
    Tensor& theta = *params[i].value;
    const Tensor& grad = *params[i].grad;
    Tensor& m = m_[i];
    Tensor& v = v_[i];
    for (size_t k = 0; k < theta.size(); ++k) {
      const double g = grad[k];
      if (!std::isfinite(g)) {
        throw std::runtime_error("non-finite gradient in " + params[i].name +
                                 " at element " + std::to_string(k));
      }
      const double mk = beta1_ * m[k] + (1.0 - beta1_) * g;
      const double vk = beta2_ * v[k] + (1.0 - beta2_) * g * g;
      m[k] = static_cast<float>(mk);
      v[k] = static_cast<float>(vk);
      const double update = lr * (mk / bc1) / (std::sqrt(vk / bc2) + eps_);
      theta[k] = static_cast<float>(theta[k] - update);
    }
  }
}

// ---- plateau schedule ----

PlateauScheduler::PlateauScheduler(const TrainConfig& cfg) : cfg_(cfg), lr_(cfg.lr_init) {}

double PlateauScheduler::observe(double val_loss) {
  if (val_loss < best_ * (1.0 - cfg_.plateau_min_delta)) {
    best_ = val_loss;
    bad_epochs_ = 0;
  } else if (++bad_epochs_ >= cfg_.plateau_patience) {
    lr_ = std::max(lr_ * cfg_.lr_factor, cfg_.lr_floor);
    bad_epochs_ = 0;
  }
  return lr_;
}

void PlateauScheduler::restore(double lr, double best, size_t bad_epochs) {
  lr_ = lr;
  best_ = best;
  bad_epochs_ = bad_epochs;
}

double plateau_schedule(const std::vector<double>& history, double current_lr,
                        const TrainConfig& cfg) {
  PlateauScheduler sched(cfg);
  sched.restore(current_lr, std::numeric_limits<double>::infinity(), 0);
  double lr = current_lr;
  for (double v : history) lr = sched.observe(v);
  return lr;
}

// ---- batches & evaluation ----

namespace {

struct Batch {
  Tensor static_in;            // [N,7,H,W]
  std::vector<Tensor> frames;  // 12 x [N,9,H,W]
  Tensor target;               // [N,6,8,H,W]
};

Batch assemble_batch(const Dataset& data, const std::vector<WindowRef>& refs,
                     size_t begin, size_t end) {
  const size_t n = end - begin;
  const size_t h = data.manifest.height, w = data.manifest.width;
  Batch b;
  b.static_in = Tensor({n, 7, h, w});
  b.frames.assign(12, Tensor({n, 9, h, w}));
  b.target = Tensor({n, 6, 8, h, w});
  const size_t static_chw = 7 * h * w;
  for (size_t i = 0; i < n; ++i) {
    const auto [day, t] = refs[begin + i];
    Sample s = extract_window(data.days.at(day), make_window(t));
    std::copy(data.static_chw.data(), data.static_chw.data() + static_chw,
              b.static_in.data() + i * static_chw);
    for (size_t k = 0; k < 12; ++k) {
      std::copy(s.frames[k].data(), s.frames[k].data() + s.frames[k].size(),
                b.frames[k].data() + i * s.frames[k].size());
    }
    std::copy(s.target.data(), s.target.data() + s.target.size(),
              b.target.data() + i * s.target.size());
  }
  return b;
}

std::vector<WindowRef> subsample(const std::vector<WindowRef>& all, size_t cap) {
  if (cap == 0 || cap >= all.size()) return all;
  std::vector<WindowRef> picked;
  picked.reserve(cap);
  if (cap == 1) {
    picked.push_back(all.front());
    return picked;
  }
  for (size_t i = 0; i < cap; ++i) {
    const size_t idx = (i * (all.size() - 1) + (cap - 1) / 2) / (cap - 1);
    picked.push_back(all[idx]);
  }
  return picked;
}

void accumulate_horizon_sse(const Tensor& pred, const Tensor& target,
                            std::array<double, 6>& sse) {
  // pred/target [N,6,8,H,W]
  const size_t n = pred.dim(0), per = pred.dim(2) * pred.dim(3) * pred.dim(4);
  for (size_t i = 0; i < n; ++i) {
    for (size_t f = 0; f < 6; ++f) {
      const float* p = pred.data() + (i * 6 + f) * per;
      const float* t = target.data() + (i * 6 + f) * per;
      double acc = 0.0;
      for (size_t k = 0; k < per; ++k) {
        const double d = static_cast<double>(p[k]) - static_cast<double>(t[k]);
        acc += d * d;
      }
      sse[f] += acc;
    }
  }
}

EvalResult finalize_eval(const std::array<double, 6>& sse, size_t windows,
                         size_t elems_per_horizon) {
  EvalResult r;
  r.windows = windows;
  double total = 0.0;
  for (size_t f = 0; f < 6; ++f) {
    r.per_horizon[f] = sse[f] / static_cast<double>(windows * elems_per_horizon);
    total += r.per_horizon[f];
  }
  r.overall = total / 6.0;
  return r;
}

}  // namespace

SplitPlan make_split_plan(const Dataset& data, size_t max_train_windows,
                          size_t max_val_windows) {
  SplitPlan plan;
  for (size_t day : data.manifest.train_days) {
    for (const WindowSpec& w : window_indices(data.days.at(day).dim(0))) {
      plan.train.emplace_back(day, w.t);
    }
  }
  for (size_t day : data.manifest.val_days) {
    for (const WindowSpec& w : window_indices(data.days.at(day).dim(0))) {
      plan.val.emplace_back(day, w.t);
    }
  }
  plan.train = subsample(plan.train, max_train_windows);
  plan.val = subsample(plan.val, max_val_windows);
  return plan;
}

EvalResult evaluate(SedUNet& model, const Dataset& data,
                    const std::vector<WindowRef>& windows, size_t batch_size) {
  if (windows.empty()) throw std::invalid_argument("evaluate: empty split");
  if (batch_size == 0) throw std::invalid_argument("evaluate: batch_size must be >= 1");
  std::array<double, 6> sse{};
  const size_t h = data.manifest.height, w = data.manifest.width;
  for (size_t start = 0; start < windows.size(); start += batch_size) {
    const size_t end = std::min(windows.size(), start + batch_size);
    Batch b = assemble_batch(data, windows, start, end);
    Tensor out = model.forward(b.static_in, b.frames, /*train=*/false);
    Tensor sel = select_outputs(out, model.config());
    accumulate_horizon_sse(sel, b.target, sse);
  }
  return finalize_eval(sse, windows.size(), 8 * h * w);
}

Tensor persistence_prediction(const Sample& sample) {
  const Tensor& last = sample.frames.back();  // [9,H,W]
  const size_t h = last.dim(1), w = last.dim(2);
  Tensor pred({6, 8, h, w});
  for (size_t f = 0; f < 6; ++f) {
    std::copy(last.data(), last.data() + 8 * h * w, pred.data() + f * 8 * h * w);
  }
  return pred;
}

EvalResult evaluate_persistence(const Dataset& data,
                                const std::vector<WindowRef>& windows) {
  if (windows.empty()) throw std::invalid_argument("evaluate: empty split");
  std::array<double, 6> sse{};
  const size_t h = data.manifest.height, w = data.manifest.width;
  for (const auto& [day, t] : windows) {
    Sample s = extract_window(data.days.at(day), make_window(t));
    const Tensor pred = persistence_prediction(s);
    const size_t per = 8 * h * w;
    for (size_t f = 0; f < 6; ++f) {
      const float* p = pred.data() + f * per;
      const float* tg = s.target.data() + f * per;
      double acc = 0.0;
      for (size_t k = 0; k < per; ++k) {
        const double d = static_cast<double>(p[k]) - static_cast<double>(tg[k]);
        acc += d * d;
      }
      sse[f] += acc;
    }
  }
  return finalize_eval(sse, windows.size(), 8 * h * w);
}

// ---- checkpoints ----

namespace {

constexpr char kCkptMagic[4] = {'H', 'X', 'C', 'K'};
constexpr uint16_t kCkptVersion = 1;

void put_u16(std::string& out, uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
}

void put_u32(std::string& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

uint16_t get_u16(const uint8_t* p) { return static_cast<uint16_t>(p[0] | (p[1] << 8)); }

uint32_t get_u32(const uint8_t* p) {
  return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
         (static_cast<uint32_t>(p[2]) << 16) | (static_cast<uint32_t>(p[3]) << 24);
}

json meta_to_json(const CheckpointMeta& meta) {
  json j;
  j["model"] = detail::model_config_to_json(meta.model);
  j["train"] = detail::train_config_to_json(meta.train);
  j["epoch"] = meta.epoch;
  j["lr"] = meta.lr;
  j["adam_step"] = meta.adam_step;
  j["rng_state"] = meta.rng_state;
  j["val_history"] = meta.val_history;
  if (std::isfinite(meta.best_val)) j["best_val"] = meta.best_val;
  j["best_epoch"] = meta.best_epoch;
  if (std::isfinite(meta.plateau_best)) j["plateau_best"] = meta.plateau_best;
  j["plateau_bad_epochs"] = meta.plateau_bad_epochs;
  return j;
}

CheckpointMeta meta_from_json(const json& j) {
  CheckpointMeta meta;
  meta.model = detail::model_config_from_json(j.at("model"), "checkpoint.model");
  meta.train = detail::train_config_from_json(j.at("train"), "checkpoint.train");
  meta.epoch = j.at("epoch").get<size_t>();
  meta.lr = j.at("lr").get<double>();
  meta.adam_step = j.at("adam_step").get<uint64_t>();
  const auto state = j.at("rng_state").get<std::vector<uint64_t>>();
  if (state.size() != 4) throw std::runtime_error("corrupt rng state in checkpoint");
  std::copy(state.begin(), state.end(), meta.rng_state.begin());
  meta.val_history = j.at("val_history").get<std::vector<double>>();
  if (j.contains("best_val")) meta.best_val = j.at("best_val").get<double>();
  meta.best_epoch = j.at("best_epoch").get<size_t>();
  if (j.contains("plateau_best")) meta.plateau_best = j.at("plateau_best").get<double>();
  meta.plateau_bad_epochs = j.at("plateau_bad_epochs").get<size_t>();
  return meta;
}

}  // namespace

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  std::string bytes;
  bytes.append(kCkptMagic, 4);
  put_u16(bytes, kCkptVersion);
  put_u16(bytes, 0);
  put_u32(bytes, static_cast<uint32_t>(ckpt.tensors.size()));
  for (const auto& [name, tensor] : ckpt.tensors) {
    if (name.size() > std::numeric_limits<uint16_t>::max()) {
      throw std::runtime_error("tensor name too long for checkpoint: " + name);
    }
    put_u16(bytes, static_cast<uint16_t>(name.size()));
    bytes.append(name);
    encode_tensor(bytes, tensor);
  }
  const std::string meta = meta_to_json(ckpt.meta).dump();
  put_u32(bytes, static_cast<uint32_t>(meta.size()));
  bytes.append(meta);

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw std::runtime_error("write failed: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open: " + path);
  std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  const uint8_t* p = reinterpret_cast<const uint8_t*>(bytes.data());
  const size_t size = bytes.size();
  if (size < 12) throw std::runtime_error("truncated checkpoint");
  if (std::memcmp(p, kCkptMagic, 4) != 0) throw std::runtime_error("bad checkpoint magic");
  if (get_u16(p + 4) != kCkptVersion) {
    throw std::runtime_error("unsupported checkpoint version " + std::to_string(get_u16(p + 4)));
  }
  const uint32_t count = get_u32(p + 8);
  size_t off = 12;
  Checkpoint ckpt;
  for (uint32_t i = 0; i < count; ++i) {
    if (size - off < 2) throw std::runtime_error("truncated checkpoint entry");
    const uint16_t name_len = get_u16(p + off);
    off += 2;
    if (size - off < name_len) throw std::runtime_error("truncated checkpoint name");
    std::string name(reinterpret_cast<const char*>(p + off), name_len);
    off += name_len;
    AnyTensor any;
    off += decode_tensor(p + off, size - off, any);
    Tensor* t = std::get_if<Tensor>(&any);
    if (!t) throw std::runtime_error("checkpoint entry is not f32: " + name);
    if (!ckpt.tensors.emplace(std::move(name), std::move(*t)).second) {
      throw std::runtime_error("duplicate tensor name in checkpoint");
    }
  }
  if (size - off < 4) throw std::runtime_error("truncated checkpoint metadata");
  const uint32_t meta_len = get_u32(p + off);
  off += 4;
  if (size - off < meta_len) throw std::runtime_error("truncated checkpoint metadata");
  ckpt.meta = meta_from_json(json::parse(bytes.substr(off, meta_len)));
  return ckpt;
}

Checkpoint make_checkpoint(SedUNet& model, Adam& opt, const CheckpointMeta& meta) {
  Checkpoint ckpt;
  ckpt.meta = meta;
  const auto insert = [&](const std::string& name, const Tensor& t) {
    if (!ckpt.tensors.emplace(name, t).second) {
      throw std::runtime_error("duplicate tensor name in checkpoint: " + name);
    }
  };
  const auto params = model.parameters();
  for (const ParamRef& p : params) insert(p.name, *p.value);
  for (const BufferRef& b : model.buffers()) insert(b.name, *b.value);
  if (opt.first_moments().size() == params.size()) {
    for (size_t i = 0; i < params.size(); ++i) {
      insert("adam.m." + params[i].name, opt.first_moments()[i]);
      insert("adam.v." + params[i].name, opt.second_moments()[i]);
    }
  }
  return ckpt;
}

void restore_model(SedUNet& model, const Checkpoint& ckpt) {
  const auto fetch = [&](const std::string& name) -> const Tensor& {
    const auto it = ckpt.tensors.find(name);
    if (it == ckpt.tensors.end()) {
      throw std::runtime_error("checkpoint is missing tensor: " + name);
    }
    return it->second;
  };
  for (const ParamRef& p : model.parameters()) {
    const Tensor& t = fetch(p.name);
    if (!t.same_shape(*p.value)) {
      throw std::runtime_error("checkpoint tensor shape mismatch: " + p.name);
    }
    *p.value = t;
  }
  for (const BufferRef& b : model.buffers()) {
    const Tensor& t = fetch(b.name);
    if (!t.same_shape(*b.value)) {
      throw std::runtime_error("checkpoint tensor shape mismatch: " + b.name);
    }
    *b.value = t;
  }
}

void restore_adam(Adam& opt, SedUNet& model, const Checkpoint& ckpt) {
  opt.set_step_count(ckpt.meta.adam_step);
  opt.first_moments().clear();
  opt.second_moments().clear();
  if (ckpt.meta.adam_step == 0) return;
  for (const ParamRef& p : model.parameters()) {
    const auto mit = ckpt.tensors.find("adam.m." + p.name);
    const auto vit = ckpt.tensors.find("adam.v." + p.name);
    if (mit == ckpt.tensors.end() || vit == ckpt.tensors.end()) {
      throw std::runtime_error("checkpoint is missing optimizer state for: " + p.name);
    }
    opt.first_moments().push_back(mit->second);
    opt.second_moments().push_back(vit->second);
  }
}

// ---- metrics & fit ----

std::string metrics_csv_header() {
  return "epoch,lr,train_mse,val_mse,val_mse_u8,h5,h10,h15,h30,h45,h60,seconds";
}

std::string metrics_csv_row(const MetricsRow& row) {
  std::ostringstream out;
  out << std::setprecision(10);
  out << row.epoch << ',' << row.lr << ',' << row.train_mse << ',' << row.val_mse << ','
      << row.val_mse_u8;
  for (double h : row.horizons) out << ',' << h;
  out << ',' << row.seconds;
  return out.str();
}

FitResult fit(SedUNet& model, const Dataset& data, const SplitPlan& plan,
              const TrainConfig& cfg, const std::string& out_dir,
              const Checkpoint* resume,
              const std::function<void(const MetricsRow&)>& on_epoch) {
  validate_config(cfg);
  if (plan.train.empty()) throw std::invalid_argument("fit: empty training split");
  if (plan.val.empty()) throw std::invalid_argument("fit: empty validation split");
  fs::create_directories(out_dir);

  const auto params = model.parameters();
  Adam opt(cfg.beta1, cfg.beta2, cfg.eps);
  PlateauScheduler sched(cfg);
  Prng rng(cfg.seed);
  size_t start_epoch = 0;
  FitResult result;
  std::vector<double> val_history;

  if (resume) {
    restore_model(model, *resume);
    restore_adam(opt, model, *resume);
    rng.set_state(resume->meta.rng_state);
    sched.restore(resume->meta.lr, resume->meta.plateau_best,
                  resume->meta.plateau_bad_epochs);
    start_epoch = resume->meta.epoch;
    result.best_val = resume->meta.best_val;
    result.best_epoch = resume->meta.best_epoch;
    val_history = resume->meta.val_history;
  }
  double lr = resume ? resume->meta.lr : cfg.lr_init;

  result.csv_path = (fs::path(out_dir) / "metrics.csv").string();
  result.best_checkpoint = (fs::path(out_dir) / "best.hxck").string();
  result.last_checkpoint = (fs::path(out_dir) / "last.hxck").string();
  const bool fresh_csv = !fs::exists(result.csv_path) || fs::file_size(result.csv_path) == 0;
  std::ofstream csv(result.csv_path, std::ios::app);
  if (!csv) throw std::runtime_error("cannot open metrics csv: " + result.csv_path);
  if (fresh_csv) csv << metrics_csv_header() << '\n';

  const auto snapshot_meta = [&](size_t epoch) {
    CheckpointMeta meta;
    meta.model = model.config();
    meta.train = cfg;
    meta.epoch = epoch;
    meta.lr = lr;
    meta.adam_step = opt.step_count();
    meta.rng_state = rng.state();
    meta.val_history = val_history;
    meta.best_val = result.best_val;
    meta.best_epoch = result.best_epoch;
    meta.plateau_best = sched.best();
    meta.plateau_bad_epochs = sched.bad_epochs();
    return meta;
  };

  for (size_t epoch = start_epoch + 1; epoch <= cfg.max_epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    std::vector<WindowRef> order = plan.train;
    rng.shuffle(order);

    double loss_sum = 0.0;
    size_t seen = 0;
    for (size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const size_t end = std::min(order.size(), start + cfg.batch_size);
      Batch b = assemble_batch(data, order, start, end);
      Tensor out = model.forward(b.static_in, b.frames, /*train=*/true);
      Tensor sel = select_outputs(out, model.config());
      MseResult loss = mse_loss(sel, b.target);
      if (!std::isfinite(loss.value)) {
        save_checkpoint((fs::path(out_dir) / "diagnostic.hxck").string(),
                        make_checkpoint(model, opt, snapshot_meta(epoch - 1)));
        throw std::runtime_error("non-finite training loss at epoch " +
                                 std::to_string(epoch));
      }
      model.zero_grad();
      model.backward(select_outputs_backward(loss.grad, model.config()));
      opt.step(params, lr);
      loss_sum += loss.value * static_cast<double>(end - start);
      seen += end - start;
      ++result.steps;
    }

    const EvalResult ev = evaluate(model, data, plan.val, cfg.batch_size);
    val_history.push_back(ev.overall);
    const double used_lr = lr;
    lr = sched.observe(ev.overall);

    MetricsRow row;
    row.epoch = epoch;
    row.lr = used_lr;
    row.train_mse = loss_sum / static_cast<double>(seen);
    row.val_mse = ev.overall;
    row.val_mse_u8 = ev.overall * 255.0 * 255.0;
    row.horizons = ev.per_horizon;
    row.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    csv << metrics_csv_row(row) << '\n';
    csv.flush();
    result.rows.push_back(row);
    if (on_epoch) on_epoch(row);

    if (ev.overall < result.best_val) {
      result.best_val = ev.overall;
      result.best_epoch = epoch;
      save_checkpoint(result.best_checkpoint, make_checkpoint(model, opt, snapshot_meta(epoch)));
    }
  }

  const size_t final_epoch = std::max(start_epoch, cfg.max_epochs);
  save_checkpoint(result.last_checkpoint, make_checkpoint(model, opt, snapshot_meta(final_epoch)));
  return result;
}

}  // namespace sedenet
