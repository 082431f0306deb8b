#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "sedenet/data.hpp"
#include "sedenet/prng.hpp"

using namespace sedenet;
namespace fs = std::filesystem;

namespace {

std::string temp_dir(const char* tag) {
  const fs::path p = fs::temp_directory_path() / (std::string("sedenet_test_") + tag);
  fs::remove_all(p);
  fs::create_directories(p);
  return p.string();
}

std::string file_bytes(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  REQUIRE(f.good());
  return std::string((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
}

}  // namespace

TEST_CASE("tensor files round-trip byte-identically across ranks and dtypes") {
  Prng rng(1);
  const std::string dir = temp_dir("roundtrip");
  const std::vector<std::vector<size_t>> shapes = {
      {7}, {3, 4}, {2, 3, 4}, {2, 3, 2, 5}};
  for (const auto& shape : shapes) {
    Tensor f(shape);
    for (size_t i = 0; i < f.size(); ++i) f[i] = rng.uniform_float(-5.0f, 5.0f);
    const std::string pf = dir + "/f32.hxt";
    save_tensor(pf, f);
    const Tensor f2 = load_tensor_f32(pf);
    CHECK(f2 == f);
    save_tensor(pf, f2);
    const std::string once = file_bytes(pf);
    save_tensor(pf, load_tensor_f32(pf));
    CHECK(file_bytes(pf) == once);

    TensorU8 u(shape);
    for (size_t i = 0; i < u.size(); ++i) u[i] = static_cast<uint8_t>(rng.uniform_int(256));
    const std::string pu = dir + "/u8.hxt";
    save_tensor(pu, u);
    CHECK(load_tensor_u8(pu) == u);
  }
}

TEST_CASE("file layout arithmetic: header 8 bytes, then dims, then payload") {
  const std::string dir = temp_dir("layout");
  Tensor t({2, 3});
  for (size_t i = 0; i < 6; ++i) t[i] = static_cast<float>(i);
  const std::string path = dir + "/t.hxt";
  save_tensor(path, t);
  const std::string bytes = file_bytes(path);
  CHECK(bytes.size() == 8 + 2 * 8 + 24);
  CHECK(bytes.substr(0, 4) == "HXT1");
  CHECK(bytes[4] == 1);  // f32
  CHECK(bytes[5] == 2);  // rank
  CHECK(bytes[6] == 0);
  CHECK(bytes[7] == 0);
  CHECK(static_cast<unsigned char>(bytes[8]) == 2);   // first dim, little-endian
  CHECK(static_cast<unsigned char>(bytes[16]) == 3);  // second dim
}

TEST_CASE("loader rejects corrupt files") {
  const std::string dir = temp_dir("corrupt");
  Tensor t({4}, 1.5f);
  const std::string path = dir + "/t.hxt";
  save_tensor(path, t);
  std::string bytes = file_bytes(path);

  {
    std::string bad = bytes;
    bad[0] = 'X';
    std::ofstream(dir + "/bad_magic.hxt", std::ios::binary) << bad;
    CHECK_THROWS_WITH_AS(load_tensor(dir + "/bad_magic.hxt"), "bad magic",
                         std::runtime_error);
  }
  {
    std::string bad = bytes.substr(0, bytes.size() - 3);
    std::ofstream(dir + "/trunc.hxt", std::ios::binary) << bad;
    CHECK_THROWS_WITH_AS(load_tensor(dir + "/trunc.hxt"), "truncated payload",
                         std::runtime_error);
  }
  {
    std::string bad = bytes;
    bad[4] = 7;
    std::ofstream(dir + "/dtype.hxt", std::ios::binary) << bad;
    CHECK_THROWS_WITH_AS(load_tensor(dir + "/dtype.hxt"), "unknown dtype code 7",
                         std::runtime_error);
  }
  {
    std::string bad = bytes;
    for (int i = 8; i < 16; ++i) bad[i] = static_cast<char>(0xff);  // absurd dim
    std::ofstream(dir + "/overflow.hxt", std::ios::binary) << bad;
    CHECK_THROWS_WITH_AS(load_tensor(dir + "/overflow.hxt"), "dims overflow",
                         std::runtime_error);
  }
  {
    std::string bad = bytes + "zz";
    std::ofstream(dir + "/trailing.hxt", std::ios::binary) << bad;
    CHECK_THROWS_AS(load_tensor(dir + "/trailing.hxt"), std::runtime_error);
  }
  // dtype mismatch through the typed loaders
  CHECK_THROWS_AS(load_tensor_u8(path), std::runtime_error);
}

TEST_CASE("window indices") {
  const auto w288 = window_indices(288);
  CHECK(w288.size() == 265);
  CHECK(w288.front().t == 0);
  const std::array<size_t, 6> first_out = {12, 13, 14, 17, 20, 23};
  CHECK(w288.front().output_indices == first_out);
  const std::array<size_t, 12> first_in = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11};
  CHECK(w288.front().input_indices == first_in);
  CHECK(w288.back().t == 264);
  CHECK(w288.back().output_indices.back() == 287);

  CHECK(window_indices(24).size() == 1);
  CHECK(window_indices(23).empty());
  for (size_t n = 0; n <= 300; ++n) {
    CHECK(window_indices(n).size() == (n >= 24 ? n - 23 : 0));
  }
}

TEST_CASE("extract_window converts, scales and drops the incident channel") {
  TensorU8 day({30, 4, 5, 9});
  // mark a couple of extreme values
  day(size_t{0}, size_t{1}, size_t{2}, size_t{3}) = 255;
  day(size_t{12}, size_t{0}, size_t{0}, size_t{0}) = 255;  // first horizon, channel 0
  day(size_t{12}, size_t{0}, size_t{0}, size_t{8}) = 200;  // incident channel, dropped
  const Sample s = extract_window(day, make_window(0));
  CHECK(s.frames.size() == 12);
  CHECK(s.frames[0].shape() == std::vector<size_t>{9, 4, 5});
  CHECK(s.target.shape() == std::vector<size_t>{6, 8, 4, 5});
  CHECK(s.frames[0](size_t{3}, size_t{1}, size_t{2}) == 1.0f);
  CHECK(s.target(size_t{0}, size_t{0}, size_t{0}, size_t{0}) == 1.0f);
  for (size_t i = 0; i < s.target.size(); ++i) {
    CHECK(s.target[i] >= 0.0f);
    CHECK(s.target[i] <= 1.0f);
  }
  // the incident value shows up nowhere in the target
  double sum = 0.0;
  for (size_t c = 0; c < 8; ++c) sum += s.target(size_t{0}, c, size_t{0}, size_t{0});
  CHECK(sum == 1.0);

  CHECK_THROWS_AS(extract_window(day, make_window(20)), std::invalid_argument);

  const TensorU8 zero_day({24, 4, 5, 9});
  const Sample z = extract_window(zero_day, make_window(0));
  for (const Tensor& f : z.frames) {
    for (size_t i = 0; i < f.size(); ++i) CHECK(f[i] == 0.0f);
  }
  for (size_t i = 0; i < z.target.size(); ++i) CHECK(z.target[i] == 0.0f);
}

TEST_CASE("denormalize_and_quantize") {
  Tensor t({5});
  t[0] = 0.5f;
  t[1] = -0.1f;
  t[2] = 1.2f;
  t[3] = 0.0f;
  t[4] = 1.0f;
  const TensorU8 q = denormalize_and_quantize(t);
  CHECK(q[0] == 128);  // round half away from zero
  CHECK(q[1] == 0);
  CHECK(q[2] == 255);
  CHECK(q[3] == 0);
  CHECK(q[4] == 255);

  // quantize(normalize(v)) is the identity on u8
  for (int v = 0; v <= 255; ++v) {
    Tensor x({1});
    x[0] = static_cast<float>(v) / 255.0f;
    CHECK(denormalize_and_quantize(x)[0] == v);
  }

  Tensor bad({1});
  bad[0] = std::numeric_limits<float>::quiet_NaN();
  CHECK_THROWS_AS(denormalize_and_quantize(bad), std::runtime_error);
}

TEST_CASE("toy city generator is deterministic and structured") {
  GeneratorConfig cfg;
  cfg.height = 16;
  cfg.width = 16;
  cfg.num_days = 2;
  cfg.seed = 7;
  const ToyCity a = generate_toy_city(cfg);
  const ToyCity b = generate_toy_city(cfg);
  REQUIRE(a.days.size() == 2);
  CHECK(a.static_map == b.static_map);
  for (size_t d = 0; d < a.days.size(); ++d) CHECK(a.days[d] == b.days[d]);

  const ToyCity c = generate_toy_city({16, 16, 1, 8, 4, 0.05});
  bool any_diff = false;
  for (size_t i = 0; i < c.days[0].size() && !any_diff; ++i) {
    any_diff = c.days[0][i] != a.days[0][i];
  }
  CHECK(any_diff);

  // off-lane pixels carry no traffic in channels 0..7
  for (size_t y = 0; y < 16; ++y) {
    for (size_t x = 0; x < 16; ++x) {
      if (a.static_map(y, x, size_t{0}) != 0) continue;
      for (size_t t = 0; t < 288; t += 37) {
        for (size_t ch = 0; ch < 8; ++ch) CHECK(a.days[0](t, y, x, ch) == 0);
      }
    }
  }

  // static channels: lane mask implies exactly one heading one-hot off junctions
  for (size_t y = 0; y < 16; ++y) {
    for (size_t x = 0; x < 16; ++x) {
      if (a.static_map(y, x, size_t{0}) == 255 && a.static_map(y, x, size_t{6}) == 0) {
        int hot = 0;
        for (size_t c = 1; c <= 4; ++c) hot += a.static_map(y, x, c) == 255 ? 1 : 0;
        CHECK(hot == 1);
      }
      if (a.static_map(y, x, size_t{0}) == 255) CHECK(a.static_map(y, x, size_t{5}) == 0);
    }
  }

  CHECK_THROWS_AS(generate_toy_city({4, 16, 1, 0, 4, 0.0}), std::invalid_argument);
}

TEST_CASE("the generated city is predictable: persistence loses to the day-periodic oracle") {
  GeneratorConfig cfg;
  cfg.height = 16;
  cfg.width = 16;
  cfg.num_days = 2;
  cfg.seed = 3;
  cfg.incident_rate = 0.0;  // clean periodicity for the oracle
  const ToyCity city = generate_toy_city(cfg);

  double persistence_sse = 0.0, periodic_sse = 0.0;
  size_t count = 0;
  for (size_t t = 0; t + 23 < 288; t += 13) {
    const Sample s = extract_window(city.days[1], make_window(t));
    const Sample prev = extract_window(city.days[0], make_window(t));
    const Tensor& last = s.frames.back();
    for (size_t f = 0; f < 6; ++f) {
      for (size_t c = 0; c < 8; ++c) {
        for (size_t y = 0; y < 16; ++y) {
          for (size_t x = 0; x < 16; ++x) {
            const double target = s.target(f, c, y, x);
            const double pers = last(c, y, x);
            const double peri = prev.target(f, c, y, x);  // same clock, previous day
            persistence_sse += (pers - target) * (pers - target);
            periodic_sse += (peri - target) * (peri - target);
            ++count;
          }
        }
      }
    }
  }
  CHECK(periodic_sse == 0.0);  // identical dynamics across incident-free days
  CHECK(persistence_sse > 0.0);
  CHECK(persistence_sse / count > periodic_sse / count);
}

TEST_CASE("dataset directory round trip") {
  GeneratorConfig gcfg;
  gcfg.height = 16;
  gcfg.width = 16;
  gcfg.num_days = 3;
  gcfg.seed = 5;
  const ToyCity city = generate_toy_city(gcfg);
  DatasetManifest manifest;
  manifest.height = 16;
  manifest.width = 16;
  manifest.num_days = 3;
  manifest.seed = 5;
  manifest.train_days = {0, 1};
  manifest.val_days = {2};

  const std::string dir = temp_dir("dataset");
  write_dataset(dir, city, manifest, /*force=*/true);
  CHECK(fs::exists(dir + "/static.hxt"));
  CHECK(fs::exists(dir + "/day_0000.hxt"));
  CHECK(fs::exists(dir + "/day_0002.hxt"));

  CHECK_THROWS_AS(write_dataset(dir, city, manifest, /*force=*/false), std::runtime_error);

  const Dataset ds = load_dataset(dir);
  CHECK(ds.manifest.train_days == manifest.train_days);
  CHECK(ds.manifest.val_days == manifest.val_days);
  CHECK(ds.days.size() == 3);
  CHECK(ds.days[1] == city.days[1]);
  CHECK(ds.static_chw.shape() == std::vector<size_t>{7, 16, 16});
  CHECK(ds.static_chw(size_t{0}, size_t{0}, size_t{0}) ==
        static_cast<float>(city.static_map(size_t{0}, size_t{0}, size_t{0})) / 255.0f);

  // unknown manifest keys are rejected
  std::ofstream(dir + "/manifest.json")
      << R"({"height":16,"width":16,"num_days":3,"seed":5,"train_days":[0],"val_days":[1],"bogus":1})";
  CHECK_THROWS_AS(load_dataset(dir), std::runtime_error);
}
