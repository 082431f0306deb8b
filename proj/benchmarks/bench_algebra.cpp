#include <benchmark/benchmark.h>

#include "sedenet/algebra.hpp"
#include "sedenet/prng.hpp"

using namespace sedenet;

namespace {

void BM_CayleyDicksonTable16(benchmark::State& state) {
  for (auto _ : state) {
    benchmark::DoNotOptimize(SignedIndexTable::cayley_dickson(16));
  }
}
BENCHMARK(BM_CayleyDicksonTable16);

void BM_HyperMul16(benchmark::State& state) {
  const SignedIndexTable table = SignedIndexTable::cayley_dickson(16);
  Prng rng(3);
  HyperNumber a(16), b(16);
  for (int i = 0; i < 16; ++i) {
    a[i] = rng.uniform(-1.0, 1.0);
    b[i] = rng.uniform(-1.0, 1.0);
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(hyper_mul(a, b, table));
  }
}
BENCHMARK(BM_HyperMul16);

void BM_ZeroDivisorSearch(benchmark::State& state) {
  const SignedIndexTable table = SignedIndexTable::cayley_dickson(16);
  for (auto _ : state) {
    benchmark::DoNotOptimize(find_zero_divisor(table));
  }
}
BENCHMARK(BM_ZeroDivisorSearch);

}  // namespace

BENCHMARK_MAIN();
