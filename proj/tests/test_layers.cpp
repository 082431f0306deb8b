#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "sedenet/algebra.hpp"
#include "sedenet/layers.hpp"
#include "sedenet/prng.hpp"
#include "testutil.hpp"

using namespace sedenet;
using testutil::conv2d_reference;
using testutil::max_abs_diff;
using testutil::random_tensor;

namespace {

// Reference forward: one dense real convolution with the assembled
// block-structured weight, run through the 6-loop oracle.
Tensor block_matrix_forward(const HxConvLayer& layer, const Tensor& input) {
  const HxConvSpec& s = layer.spec();
  const Conv2dSpec big{16 * s.comp_in, 16 * s.comp_out, s.kernel_h, s.kernel_w,
                       s.stride, s.padding};
  Tensor out = conv2d_reference(input, layer.block_weight(), big);
  if (layer.has_bias()) add_channel_bias(out, layer.bias());
  return out;
}

HxConvLayer make_layer(const HxConvSpec& spec, uint64_t seed) {
  Prng rng(seed);
  return HxConvLayer(spec, rng);
}

}  // namespace

TEST_CASE("sedenion identity weight passes the input through") {
  HxConvSpec spec{1, 1, 1, 1, 1, 0, false};
  HxConvLayer layer = make_layer(spec, 1);
  layer.banks().fill(0.0f);
  layer.banks()(size_t{0}, size_t{0}, size_t{0}, size_t{0}, size_t{0}) = 1.0f;  // W = 1

  Prng rng(2);
  const Tensor input = random_tensor({2, 16, 5, 5}, rng);
  const Tensor out = layer.forward(input);
  CHECK(max_abs_diff(out, input) == 0.0f);
}

TEST_CASE("W = e1 on an e2 input lands on component 3 at every pixel") {
  HxConvSpec spec{1, 1, 1, 1, 1, 0, false};
  HxConvLayer layer = make_layer(spec, 1);
  layer.banks().fill(0.0f);
  layer.banks()(size_t{1}, size_t{0}, size_t{0}, size_t{0}, size_t{0}) = 1.0f;  // W = e_1

  Tensor input({1, 16, 3, 3});
  for (size_t y = 0; y < 3; ++y)
    for (size_t x = 0; x < 3; ++x) input(size_t{0}, size_t{2}, y, x) = 1.0f;  // X = e_2

  const Tensor out = layer.forward(input);
  for (size_t c = 0; c < 16; ++c)
    for (size_t y = 0; y < 3; ++y)
      for (size_t x = 0; x < 3; ++x) {
        CHECK(out(size_t{0}, c, y, x) == (c == 3 ? 1.0f : 0.0f));
      }
}

TEST_CASE("forward equals the explicit block-matrix convolution on random instances") {
  Prng rng(3);
  int instance = 0;
  for (size_t cg_in : {1, 2, 3}) {
    for (size_t cg_out : {1, 2}) {
      for (size_t kernel : {1, 3}) {
        const size_t pad = kernel / 2;
        HxConvSpec spec{cg_in, cg_out, kernel, kernel, 1, pad, instance % 2 == 0};
        HxConvLayer layer = make_layer(spec, 10 + static_cast<uint64_t>(instance));
        if (layer.has_bias()) {
          for (size_t i = 0; i < layer.bias().size(); ++i) {
            layer.bias()[i] = rng.uniform_float(-0.2f, 0.2f);
          }
        }
        const size_t batch = 1 + static_cast<size_t>(instance % 2);
        const Tensor input = random_tensor({batch, 16 * cg_in, 6, 5}, rng);
        const Tensor got = layer.forward(input);
        const Tensor want = block_matrix_forward(layer, input);
        CHECK(max_abs_diff(got, want) <= 1e-4f);
        ++instance;
      }
    }
  }
  CHECK(instance == 12);
}

TEST_CASE("forward equals per-pixel sedenion multiplication for 1x1 kernels") {
  Prng rng(4);
  HxConvSpec spec{1, 1, 1, 1, 1, 0, false};
  HxConvLayer layer = make_layer(spec, 5);
  const Tensor input = random_tensor({1, 16, 4, 4}, rng);
  const Tensor out = layer.forward(input);

  HyperNumber w(16);
  for (int k = 0; k < 16; ++k) {
    w[k] = layer.banks()(static_cast<size_t>(k), size_t{0}, size_t{0}, size_t{0}, size_t{0});
  }
  const SignedIndexTable& table = sedenion_table();
  for (size_t y = 0; y < 4; ++y) {
    for (size_t x = 0; x < 4; ++x) {
      HyperNumber px(16);
      for (int k = 0; k < 16; ++k) px[k] = input(size_t{0}, static_cast<size_t>(k), y, x);
      const HyperNumber want = hyper_mul(w, px, table);
      for (int k = 0; k < 16; ++k) {
        CHECK(out(size_t{0}, static_cast<size_t>(k), y, x) ==
              doctest::Approx(want[k]).epsilon(1e-5));
      }
    }
  }
}

TEST_CASE("forward is linear for bias-free layers") {
  Prng rng(6);
  HxConvLayer layer = make_layer(HxConvSpec{2, 2, 3, 3, 1, 1, false}, 7);
  const Tensor x = random_tensor({1, 32, 6, 6}, rng);
  const Tensor z = random_tensor({1, 32, 6, 6}, rng);
  const float a = 0.7f, b = -1.3f;
  Tensor mix(x.shape());
  for (size_t i = 0; i < x.size(); ++i) mix[i] = a * x[i] + b * z[i];
  const Tensor lhs = layer.forward(mix);
  const Tensor fx = layer.forward(x), fz = layer.forward(z);
  Tensor rhs(lhs.shape());
  for (size_t i = 0; i < rhs.size(); ++i) rhs[i] = a * fx[i] + b * fz[i];
  CHECK(max_abs_diff(lhs, rhs) <= 1e-4f);
}

TEST_CASE("every bank index appears exactly 16 times in the table") {
  const SignedIndexTable& t = sedenion_table();
  int counts[16] = {0};
  for (int r = 0; r < 16; ++r)
    for (int c = 0; c < 16; ++c) ++counts[t.index(r, c)];
  for (int m = 0; m < 16; ++m) CHECK(counts[m] == 16);
}

TEST_CASE("backward: zero grad_out yields zero gradients") {
  Prng rng(8);
  HxConvLayer layer = make_layer(HxConvSpec{1, 1, 3, 3, 1, 1, true}, 9);
  const Tensor input = random_tensor({1, 16, 4, 4}, rng);
  const Tensor zero_go({1, 16, 4, 4});
  layer.zero_grad();
  const Tensor gi = layer.backward(input, zero_go);
  for (size_t i = 0; i < gi.size(); ++i) CHECK(gi[i] == 0.0f);
  for (size_t i = 0; i < layer.grad_banks().size(); ++i) CHECK(layer.grad_banks()[i] == 0.0f);
  for (size_t i = 0; i < layer.grad_bias().size(); ++i) CHECK(layer.grad_bias()[i] == 0.0f);
}

TEST_CASE("backward matches finite differences on banks, bias and input") {
  Prng rng(10);
  HxConvSpec spec{1, 1, 3, 3, 1, 1, true};
  HxConvLayer layer = make_layer(spec, 11);
  for (size_t i = 0; i < layer.bias().size(); ++i) layer.bias()[i] = rng.uniform_float(-0.1f, 0.1f);
  const Tensor input = random_tensor({1, 16, 4, 4}, rng);
  const Tensor out = layer.forward(input);
  const Tensor coeffs = random_tensor(out.shape(), rng);

  layer.zero_grad();
  const Tensor grad_input = layer.backward(input, coeffs);

  const auto loss_wrt_input = [&](const Tensor& x) {
    return testutil::weighted_sum(layer.forward(x), coeffs);
  };
  CHECK(testutil::max_grad_rel_error(loss_wrt_input, input, grad_input, rng, 60) <= 1e-2);

  HxConvLayer probe = layer;
  const auto loss_wrt_banks = [&](const Tensor& banks) {
    probe.banks() = banks;
    return testutil::weighted_sum(probe.forward(input), coeffs);
  };
  CHECK(testutil::max_grad_rel_error(loss_wrt_banks, layer.banks(), layer.grad_banks(),
                                     rng, 60) <= 1e-2);

  HxConvLayer probe2 = layer;
  const auto loss_wrt_bias = [&](const Tensor& bias) {
    probe2.bias() = bias;
    return testutil::weighted_sum(probe2.forward(input), coeffs);
  };
  CHECK(testutil::max_grad_rel_error(loss_wrt_bias, layer.bias(), layer.grad_bias(),
                                     rng, 16) <= 1e-2);
}

TEST_CASE("backward agrees with the block-matrix adjoint route") {
  Prng rng(12);
  HxConvSpec spec{2, 2, 3, 3, 1, 1, false};
  HxConvLayer layer = make_layer(spec, 13);
  const Tensor input = random_tensor({2, 32, 5, 5}, rng);
  const Tensor grad_out = random_tensor({2, 32, 5, 5}, rng);
  layer.zero_grad();
  const Tensor grad_input = layer.backward(input, grad_out);

  const Conv2dSpec big{32, 32, 3, 3, 1, 1};
  const Conv2dGrads ref = conv2d_backward(input, layer.block_weight(), grad_out, big);
  CHECK(max_abs_diff(grad_input, ref.grad_input) <= 1e-4f);
}

TEST_CASE("initialization: support bound, determinism, variance") {
  HxConvSpec spec{16, 16, 3, 3, 1, 1, false};
  const double fan_in = 16.0 * 16 * 9, fan_out = 16.0 * 16 * 9;
  const float bound = static_cast<float>(std::sqrt(6.0 / (fan_in + fan_out)));

  HxConvLayer a = make_layer(spec, 77);
  HxConvLayer b = make_layer(spec, 77);
  HxConvLayer c = make_layer(spec, 78);
  CHECK(a.banks() == b.banks());
  bool differs = false;
  for (size_t i = 0; i < a.banks().size(); ++i) differs = differs || a.banks()[i] != c.banks()[i];
  CHECK(differs);

  double sq = 0.0;
  size_t n = a.banks().size();
  REQUIRE(n >= 10000);
  for (size_t i = 0; i < n; ++i) {
    CHECK(std::fabs(a.banks()[i]) < bound);
    sq += static_cast<double>(a.banks()[i]) * a.banks()[i];
  }
  const double var = sq / static_cast<double>(n);
  const double expect = bound * bound / 3.0;
  CHECK(var >= 0.8 * expect);
  CHECK(var <= 1.2 * expect);
}

TEST_CASE("zero init scheme starts from the zero map") {
  Prng rng(20);
  HxConvLayer layer(HxConvSpec{2, 3, 3, 3, 1, 1, true}, rng, HxInit::kZero);
  for (size_t i = 0; i < layer.banks().size(); ++i) CHECK(layer.banks()[i] == 0.0f);
  for (size_t i = 0; i < layer.bias().size(); ++i) CHECK(layer.bias()[i] == 0.0f);
  const Tensor out = layer.forward(Tensor({1, 32, 4, 4}, 1.0f));
  for (size_t i = 0; i < out.size(); ++i) CHECK(out[i] == 0.0f);
}

TEST_CASE("parameter accounting: exactly 1/16 of the dense real convolution") {
  CHECK(HxConvLayer::param_count({16, 16, 3, 3, 1, 1, false}) == 36864);
  CHECK(256 * 256 * 3 * 3 == 589824);
  CHECK(589824 / 36864 == 16);
  CHECK(HxConvLayer::param_count({1, 1, 1, 1, 1, 0, false}) == 16);
  CHECK(HxConvLayer::param_count({4, 8, 3, 3, 1, 1, true}) ==
        HxConvLayer::param_count({4, 8, 3, 3, 1, 1, false}) + 128);

  for (const HxConvSpec spec : {HxConvSpec{1, 1, 1, 1, 1, 0, false},
                                HxConvSpec{2, 3, 3, 3, 1, 1, false},
                                HxConvSpec{5, 7, 3, 3, 2, 1, false}}) {
    const size_t real = (16 * spec.comp_out) * (16 * spec.comp_in) * spec.kernel_h * spec.kernel_w;
    CHECK(real == 16 * HxConvLayer::param_count(spec));
  }
}

TEST_CASE("input layout errors") {
  Prng rng(14);
  HxConvLayer layer = make_layer(HxConvSpec{2, 2, 3, 3, 1, 1, false}, 15);
  CHECK_THROWS_AS(layer.forward(Tensor({1, 33, 4, 4})), std::invalid_argument);
  CHECK_THROWS_AS(layer.forward(Tensor({1, 16, 4, 4})), std::invalid_argument);
}
