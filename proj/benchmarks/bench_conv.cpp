#include <benchmark/benchmark.h>

#include "sedenet/layers.hpp"
#include "sedenet/nn.hpp"
#include "sedenet/prng.hpp"

using namespace sedenet;

namespace {

Tensor random_input(size_t channels, size_t h, size_t w, uint64_t seed) {
  Prng rng(seed);
  Tensor t({1, channels, h, w});
  for (size_t i = 0; i < t.size(); ++i) t[i] = rng.uniform_float(-1.0f, 1.0f);
  return t;
}

void BM_HxConvForward(benchmark::State& state) {
  const size_t cg = static_cast<size_t>(state.range(0));
  const size_t hw = static_cast<size_t>(state.range(1));
  Prng rng(1);
  HxConvLayer layer(HxConvSpec{cg, cg, 3, 3, 1, 1, false}, rng);
  const Tensor input = random_input(16 * cg, hw, hw, 2);
  for (auto _ : state) {
    benchmark::DoNotOptimize(layer.forward(input));
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_HxConvForward)->Args({4, 16})->Args({8, 16})->Args({16, 32});

void BM_HxConvBackward(benchmark::State& state) {
  const size_t cg = static_cast<size_t>(state.range(0));
  const size_t hw = static_cast<size_t>(state.range(1));
  Prng rng(1);
  HxConvLayer layer(HxConvSpec{cg, cg, 3, 3, 1, 1, false}, rng);
  const Tensor input = random_input(16 * cg, hw, hw, 2);
  const Tensor grad_out = random_input(16 * cg, hw, hw, 3);
  for (auto _ : state) {
    layer.zero_grad();
    benchmark::DoNotOptimize(layer.backward(input, grad_out));
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_HxConvBackward)->Args({4, 16})->Args({8, 16});

// The dense real convolution the sedenion layer is equivalent to, at 16x the
// parameter count.
void BM_EquivalentRealConv(benchmark::State& state) {
  const size_t cg = static_cast<size_t>(state.range(0));
  const size_t hw = static_cast<size_t>(state.range(1));
  Prng rng(1);
  HxConvLayer layer(HxConvSpec{cg, cg, 3, 3, 1, 1, false}, rng);
  const Tensor big = layer.block_weight();
  const Tensor input = random_input(16 * cg, hw, hw, 2);
  const Conv2dSpec spec{16 * cg, 16 * cg, 3, 3, 1, 1};
  for (auto _ : state) {
    benchmark::DoNotOptimize(conv2d(input, big, spec));
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_EquivalentRealConv)->Args({4, 16})->Args({8, 16})->Args({16, 32});

}  // namespace
