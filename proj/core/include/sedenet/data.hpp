#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "sedenet/tensor.hpp"

namespace sedenet {

// ---- HXT1 tensor files ----
// bytes 0-3: ASCII "HXT1"; byte 4: dtype code (0=u8, 1=f32 IEEE-754);
// byte 5: rank (u8); bytes 6-7: zero; then rank x u64 little-endian dims;
// then the row-major payload (last axis fastest).

using AnyTensor = std::variant<TensorU8, Tensor>;

void encode_tensor(std::string& out, const TensorU8& t);
void encode_tensor(std::string& out, const Tensor& t);

/// Decodes one tensor starting at data; returns the bytes consumed.
/// Throws std::runtime_error on bad magic, unknown dtype, dim overflow or
/// truncation.
size_t decode_tensor(const uint8_t* data, size_t size, AnyTensor& out);

void save_tensor(const std::string& path, const TensorU8& t);
void save_tensor(const std::string& path, const Tensor& t);

AnyTensor load_tensor(const std::string& path);
Tensor load_tensor_f32(const std::string& path);    // throws on u8 payloads
TensorU8 load_tensor_u8(const std::string& path);   // throws on f32 payloads

// ---- sliding windows ----

/// Frame offsets of the six prediction horizons (5,10,15,30,45,60 min)
/// counted after the last input frame.
inline constexpr std::array<size_t, 6> kHorizonOffsets = {1, 2, 3, 6, 9, 12};

struct WindowSpec {
  size_t t = 0;
  std::array<size_t, 12> input_indices{};
  std::array<size_t, 6> output_indices{};
};

WindowSpec make_window(size_t t);

/// All windows fitting in num_frames (t + 23 < num_frames), ascending.
std::vector<WindowSpec> window_indices(size_t num_frames);

/// One training example: 12 input frames [9,H,W] (u8/255) and the target
/// [6,8,H,W] holding the first 8 channels at each horizon.
struct Sample {
  std::vector<Tensor> frames;
  Tensor target;
};

/// day is a [288,H,W,9] (or [T,H,W,9]) u8 tensor, channel-last.
Sample extract_window(const TensorU8& day, const WindowSpec& spec);

/// clamp(round(255*x), 0, 255), rounding half away from zero; NaN rejected.
TensorU8 denormalize_and_quantize(const Tensor& pred);

// ---- synthetic toy city ----

struct GeneratorConfig {
  size_t height = 16;
  size_t width = 16;
  size_t num_days = 3;
  uint64_t seed = 0;
  size_t num_lanes = 4;
  double incident_rate = 0.05;
};

struct ToyCity {
  std::vector<TensorU8> days;  // each [288,H,W,9]
  TensorU8 static_map;         // [H,W,7]
};

/// Deterministic per seed. Lanes carry smooth pulses that advect along the
/// lane and breathe with a daily envelope, so future frames are predictable
/// from past ones; days differ only in their sparse incident patterns.
ToyCity generate_toy_city(const GeneratorConfig& cfg);

// ---- dataset directory ----

struct DatasetManifest {
  size_t height = 0;
  size_t width = 0;
  size_t num_days = 0;
  uint64_t seed = 0;
  std::vector<size_t> train_days;
  std::vector<size_t> val_days;
};

std::string manifest_to_json(const DatasetManifest& m);
DatasetManifest manifest_from_json(const std::string& text);

/// Writes static.hxt, day_0000.hxt.. and manifest.json. Refuses to touch an
/// existing non-empty directory unless force is set.
void write_dataset(const std::string& dir, const ToyCity& city,
                   const DatasetManifest& manifest, bool force = false);

struct Dataset {
  DatasetManifest manifest;
  TensorU8 static_map;          // [H,W,7]
  Tensor static_chw;            // [7,H,W], u8/255
  std::vector<TensorU8> days;   // [288,H,W,9] each
};

Dataset load_dataset(const std::string& dir);

}  // namespace sedenet
