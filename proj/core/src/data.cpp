#include "sedenet/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "json.hpp"
#include "sedenet/prng.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace sedenet {
namespace {

constexpr char kMagic[4] = {'H', 'X', 'T', '1'};

void put_u64_le(std::string& out, uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

uint64_t get_u64_le(const uint8_t* p) {
  uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
  return v;
}

void encode_header(std::string& out, Dtype dtype, const std::vector<size_t>& shape) {
  out.append(kMagic, 4);
  out.push_back(static_cast<char>(dtype));
  if (shape.size() > 255) throw std::runtime_error("tensor rank exceeds format limit");
  out.push_back(static_cast<char>(shape.size()));
  out.push_back(0);
  out.push_back(0);
  for (size_t d : shape) put_u64_le(out, static_cast<uint64_t>(d));
}

void write_file(const std::string& path, const std::string& bytes) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw std::runtime_error("write failed: " + path);
}

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open: " + path);
  std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return bytes;
}

uint8_t quantize_unit(float x) {
  const float r = std::round(255.0f * x);
  return static_cast<uint8_t>(std::min(255.0f, std::max(0.0f, r)));
}

}  // namespace

void encode_tensor(std::string& out, const TensorU8& t) {
  encode_header(out, Dtype::kU8, t.shape());
  out.append(reinterpret_cast<const char*>(t.data()), t.size());
}

void encode_tensor(std::string& out, const Tensor& t) {
  encode_header(out, Dtype::kF32, t.shape());
  out.append(reinterpret_cast<const char*>(t.data()), t.size() * sizeof(float));
}

size_t decode_tensor(const uint8_t* data, size_t size, AnyTensor& out) {
  if (size < 8) throw std::runtime_error("truncated tensor header");
  if (std::memcmp(data, kMagic, 4) != 0) throw std::runtime_error("bad magic");
  const uint8_t dtype_code = data[4];
  if (dtype_code > 1) {
    throw std::runtime_error("unknown dtype code " + std::to_string(dtype_code));
  }
  if (data[6] != 0 || data[7] != 0) throw std::runtime_error("corrupt header reserved bytes");
  const size_t rank = data[5];
  size_t off = 8;
  if (size - off < 8 * rank) throw std::runtime_error("truncated dims");
  std::vector<size_t> shape(rank);
  uint64_t count = 1;
  for (size_t i = 0; i < rank; ++i) {
    const uint64_t d = get_u64_le(data + off);
    off += 8;
    if (d == 0) throw std::runtime_error("zero-sized axis");
    if (d > std::numeric_limits<uint32_t>::max() ||
        count > std::numeric_limits<uint64_t>::max() / d) {
      throw std::runtime_error("dims overflow");
    }
    count *= d;
    shape[i] = static_cast<size_t>(d);
  }
  const size_t elem = dtype_code == 0 ? 1 : sizeof(float);
  if (count > (std::numeric_limits<size_t>::max() - off) / elem) {
    throw std::runtime_error("dims overflow");
  }
  const size_t payload = static_cast<size_t>(count) * elem;
  if (size - off < payload) throw std::runtime_error("truncated payload");
  if (dtype_code == 0) {
    TensorU8 t(shape);
    std::memcpy(t.data(), data + off, payload);
    out = std::move(t);
  } else {
    Tensor t(shape);
    std::memcpy(t.data(), data + off, payload);
    out = std::move(t);
  }
  return off + payload;
}

void save_tensor(const std::string& path, const TensorU8& t) {
  std::string bytes;
  encode_tensor(bytes, t);
  write_file(path, bytes);
}

void save_tensor(const std::string& path, const Tensor& t) {
  std::string bytes;
  encode_tensor(bytes, t);
  write_file(path, bytes);
}

AnyTensor load_tensor(const std::string& path) {
  const std::string bytes = read_file(path);
  AnyTensor out;
  const size_t used =
      decode_tensor(reinterpret_cast<const uint8_t*>(bytes.data()), bytes.size(), out);
  if (used != bytes.size()) {
    throw std::runtime_error("trailing bytes after tensor payload: " + path);
  }
  return out;
}

Tensor load_tensor_f32(const std::string& path) {
  AnyTensor t = load_tensor(path);
  if (auto* p = std::get_if<Tensor>(&t)) return std::move(*p);
  throw std::runtime_error("expected f32 tensor in " + path);
}

TensorU8 load_tensor_u8(const std::string& path) {
  AnyTensor t = load_tensor(path);
  if (auto* p = std::get_if<TensorU8>(&t)) return std::move(*p);
  throw std::runtime_error("expected u8 tensor in " + path);
}

WindowSpec make_window(size_t t) {
  WindowSpec w;
  w.t = t;
  for (size_t k = 0; k < 12; ++k) w.input_indices[k] = t + k;
  for (size_t k = 0; k < 6; ++k) w.output_indices[k] = t + 11 + kHorizonOffsets[k];
  return w;
}

std::vector<WindowSpec> window_indices(size_t num_frames) {
  std::vector<WindowSpec> windows;
  if (num_frames < 24) return windows;
  windows.reserve(num_frames - 23);
  for (size_t t = 0; t + 23 < num_frames; ++t) windows.push_back(make_window(t));
  return windows;
}

Sample extract_window(const TensorU8& day, const WindowSpec& spec) {
  if (day.rank() != 4 || day.dim(3) != 9) {
    throw std::invalid_argument("day tensor must be [T,H,W,9]");
  }
  const size_t frames = day.dim(0), h = day.dim(1), w = day.dim(2);
  if (spec.output_indices.back() >= frames) {
    throw std::invalid_argument("window indices out of range");
  }
  constexpr float kScale = 1.0f / 255.0f;

  Sample s;
  s.frames.reserve(12);
  for (size_t k = 0; k < 12; ++k) {
    const size_t t = spec.input_indices[k];
    Tensor f({9, h, w});
    for (size_t c = 0; c < 9; ++c) {
      for (size_t y = 0; y < h; ++y) {
        for (size_t x = 0; x < w; ++x) {
          f(c, y, x) = kScale * static_cast<float>(day(t, y, x, c));
        }
      }
    }
    s.frames.push_back(std::move(f));
  }
  s.target = Tensor({6, 8, h, w});
  for (size_t f = 0; f < 6; ++f) {
    const size_t t = spec.output_indices[f];
    for (size_t c = 0; c < 8; ++c) {  // incident channel dropped
      for (size_t y = 0; y < h; ++y) {
        for (size_t x = 0; x < w; ++x) {
          s.target(f, c, y, x) = kScale * static_cast<float>(day(t, y, x, c));
        }
      }
    }
  }
  return s;
}

TensorU8 denormalize_and_quantize(const Tensor& pred) {
  TensorU8 out(pred.shape());
  for (size_t i = 0; i < pred.size(); ++i) {
    if (!std::isfinite(pred[i])) {
      throw std::runtime_error("non-finite value in prediction");
    }
    out[i] = quantize_unit(pred[i]);
  }
  return out;
}

// ---- toy city ----

namespace {

struct Lane {
  bool horizontal = true;
  size_t pos = 0;      // row (horizontal) or column (vertical)
  size_t heading = 0;  // 0..3 -> NE,NW,SE,SW
  double speed = 0.5;  // px per frame
  double spacing = 6.0;
  double sigma = 1.8;
  double phase = 0.0;
  double env_phase = 0.0;
  double env_depth = 0.4;
};

struct Incident {
  size_t lane = 0;
  size_t t0 = 0, t1 = 0;
  size_t center = 0, radius = 2;
};

double pulse_intensity(const Lane& lane, double p, double t) {
  const double shift = std::fmod(p - lane.speed * t - lane.phase, lane.spacing);
  const double d = shift < 0 ? shift + lane.spacing : shift;
  const double dmin = std::min(d, lane.spacing - d);
  return std::exp(-dmin * dmin / (2.0 * lane.sigma * lane.sigma));
}

double envelope(const Lane& lane, double t) {
  return (1.0 - lane.env_depth) + lane.env_depth * std::sin(2.0 * M_PI * t / 288.0 + lane.env_phase);
}

}  // namespace

ToyCity generate_toy_city(const GeneratorConfig& cfg) {
  if (cfg.height < 8 || cfg.width < 8) {
    throw std::invalid_argument("toy city needs height and width >= 8");
  }
  if (cfg.num_lanes == 0) throw std::invalid_argument("toy city needs at least one lane");
  Prng rng(cfg.seed);

  const size_t n_h = (cfg.num_lanes + 1) / 2;
  const size_t n_v = cfg.num_lanes / 2;
  std::vector<Lane> lanes;
  lanes.reserve(cfg.num_lanes);
  for (size_t l = 0; l < cfg.num_lanes; ++l) {
    Lane lane;
    lane.horizontal = (l % 2 == 0);
    const size_t slot = l / 2;
    const size_t extent = lane.horizontal ? cfg.height : cfg.width;
    const size_t slots = lane.horizontal ? n_h : n_v;
    const double base = static_cast<double>(extent) * (slot + 1) / (slots + 1);
    const double jitter = rng.uniform(-1.5, 1.5);
    lane.pos = static_cast<size_t>(std::clamp(base + jitter, 1.0, extent - 2.0));
    lane.heading = l % 4;
    lane.speed = 0.5 + 0.125 * static_cast<double>(rng.uniform_int(3));
    lane.spacing = 6.0 + rng.uniform(0.0, 3.0);
    lane.sigma = 2.2;
    lane.phase = rng.uniform(0.0, lane.spacing);
    lane.env_phase = rng.uniform(0.0, 2.0 * M_PI);
    lane.env_depth = 0.15;
    lanes.push_back(lane);
  }

  ToyCity city;
  city.static_map = TensorU8({cfg.height, cfg.width, 7});
  auto& st = city.static_map;
  std::vector<int> lane_count(cfg.height * cfg.width, 0);
  for (const Lane& lane : lanes) {
    if (lane.horizontal) {
      for (size_t x = 0; x < cfg.width; ++x) {
        st(lane.pos, x, size_t{0}) = 255;
        st(lane.pos, x, 1 + lane.heading) = 255;
        ++lane_count[lane.pos * cfg.width + x];
      }
    } else {
      for (size_t y = 0; y < cfg.height; ++y) {
        st(y, lane.pos, size_t{0}) = 255;
        st(y, lane.pos, 1 + lane.heading) = 255;
        ++lane_count[y * cfg.width + lane.pos];
      }
    }
  }
  for (size_t y = 0; y < cfg.height; ++y) {
    for (size_t x = 0; x < cfg.width; ++x) {
      double dist = 1e9;
      for (const Lane& lane : lanes) {
        const double d = lane.horizontal
                             ? std::abs(static_cast<double>(y) - static_cast<double>(lane.pos))
                             : std::abs(static_cast<double>(x) - static_cast<double>(lane.pos));
        dist = std::min(dist, d);
      }
      st(y, x, size_t{5}) = quantize_unit(static_cast<float>(std::min(1.0, dist / 8.0)));
      if (lane_count[y * cfg.width + x] > 1) st(y, x, size_t{6}) = 255;
    }
  }

  city.days.reserve(cfg.num_days);
  for (size_t day = 0; day < cfg.num_days; ++day) {
    std::vector<Incident> incidents;
    for (size_t l = 0; l < lanes.size(); ++l) {
      if (rng.uniform() < cfg.incident_rate) {
        Incident inc;
        inc.lane = l;
        inc.t0 = static_cast<size_t>(rng.uniform_int(288 - 36));
        inc.t1 = inc.t0 + 24;
        const size_t extent = lanes[l].horizontal ? cfg.width : cfg.height;
        inc.center = static_cast<size_t>(rng.uniform_int(extent));
        incidents.push_back(inc);
      }
    }

    TensorU8 frames({288, cfg.height, cfg.width, 9});
    for (size_t t = 0; t < 288; ++t) {
      for (size_t l = 0; l < lanes.size(); ++l) {
        const Lane& lane = lanes[l];
        const size_t extent = lane.horizontal ? cfg.width : cfg.height;
        const double env = envelope(lane, static_cast<double>(t));
        for (size_t p = 0; p < extent; ++p) {
          // u8 traffic maps sit low in the byte range; keep peaks moderate
          double volume =
              0.45 * env * pulse_intensity(lane, static_cast<double>(p), static_cast<double>(t));
          double speed = 0.9 - 0.6 * volume;
          bool hit_incident = false;
          for (const Incident& inc : incidents) {
            if (inc.lane == l && t >= inc.t0 && t < inc.t1 &&
                p + inc.radius >= inc.center && p <= inc.center + inc.radius) {
              hit_incident = true;
            }
          }
          if (hit_incident) {
            volume *= 0.6;
            speed *= 0.5;
          }
          const size_t y = lane.horizontal ? lane.pos : p;
          const size_t x = lane.horizontal ? p : lane.pos;
          const uint8_t vq = quantize_unit(static_cast<float>(volume));
          const uint8_t sq = quantize_unit(static_cast<float>(speed));
          auto& cell_v = frames(t, y, x, 2 * lane.heading);
          auto& cell_s = frames(t, y, x, 2 * lane.heading + 1);
          cell_v = std::max(cell_v, vq);
          cell_s = std::max(cell_s, sq);
          if (hit_incident) frames(t, y, x, size_t{8}) = 255;
        }
      }
    }
    city.days.push_back(std::move(frames));
  }
  return city;
}

// ---- dataset directory ----

std::string manifest_to_json(const DatasetManifest& m) {
  json j;
  j["height"] = m.height;
  j["width"] = m.width;
  j["num_days"] = m.num_days;
  j["seed"] = m.seed;
  j["train_days"] = m.train_days;
  j["val_days"] = m.val_days;
  return j.dump(2) + "\n";
}

DatasetManifest manifest_from_json(const std::string& text) {
  json j = json::parse(text);
  static const char* kKeys[] = {"height", "width", "num_days", "seed", "train_days", "val_days"};
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool known = false;
    for (const char* k : kKeys) known = known || it.key() == k;
    if (!known) throw std::runtime_error("unknown manifest key: " + it.key());
  }
  DatasetManifest m;
  m.height = j.at("height").get<size_t>();
  m.width = j.at("width").get<size_t>();
  m.num_days = j.at("num_days").get<size_t>();
  m.seed = j.at("seed").get<uint64_t>();
  m.train_days = j.at("train_days").get<std::vector<size_t>>();
  m.val_days = j.at("val_days").get<std::vector<size_t>>();
  return m;
}

namespace {
std::string day_file_name(size_t day) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "day_%04zu.hxt", day);
  return buf;
}
}  // namespace

void write_dataset(const std::string& dir, const ToyCity& city,
                   const DatasetManifest& manifest, bool force) {
  const fs::path root(dir);
  if (fs::exists(root) && !fs::is_empty(root) && !force) {
    throw std::runtime_error("output directory not empty (use force): " + dir);
  }
  fs::create_directories(root);
  save_tensor((root / "static.hxt").string(), city.static_map);
  for (size_t d = 0; d < city.days.size(); ++d) {
    save_tensor((root / day_file_name(d)).string(), city.days[d]);
  }
  write_file((root / "manifest.json").string(), manifest_to_json(manifest));
}

Dataset load_dataset(const std::string& dir) {
  const fs::path root(dir);
  Dataset ds;
  ds.manifest = manifest_from_json(read_file((root / "manifest.json").string()));
  ds.static_map = load_tensor_u8((root / "static.hxt").string());
  if (ds.static_map.rank() != 3 || ds.static_map.dim(2) != 7 ||
      ds.static_map.dim(0) != ds.manifest.height ||
      ds.static_map.dim(1) != ds.manifest.width) {
    throw std::runtime_error("static map shape disagrees with manifest");
  }
  const size_t h = ds.manifest.height, w = ds.manifest.width;
  ds.static_chw = Tensor({7, h, w});
  for (size_t c = 0; c < 7; ++c) {
    for (size_t y = 0; y < h; ++y) {
      for (size_t x = 0; x < w; ++x) {
        ds.static_chw(c, y, x) = static_cast<float>(ds.static_map(y, x, c)) / 255.0f;
      }
    }
  }
  ds.days.reserve(ds.manifest.num_days);
  for (size_t d = 0; d < ds.manifest.num_days; ++d) {
    TensorU8 day = load_tensor_u8((root / day_file_name(d)).string());
    if (day.rank() != 4 || day.dim(0) != 288 || day.dim(1) != h || day.dim(2) != w ||
        day.dim(3) != 9) {
      throw std::runtime_error("day file shape mismatch: " + day_file_name(d));
    }
    ds.days.push_back(std::move(day));
  }
  for (size_t d : ds.manifest.train_days) {
    if (d >= ds.days.size()) throw std::runtime_error("train split references missing day");
  }
  for (size_t d : ds.manifest.val_days) {
    if (d >= ds.days.size()) throw std::runtime_error("val split references missing day");
  }
  return ds;
}

}  // namespace sedenet
