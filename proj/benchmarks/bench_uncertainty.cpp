#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "ueval/tensor.hpp"
#include "ueval/uncertainty.hpp"

namespace {

ueval::ProbStack make_stack(std::size_t samples, std::int32_t classes,
                            std::size_t side) {
  std::mt19937_64 rng(42);
  const std::size_t n =
      samples * static_cast<std::size_t>(classes) * side * side;
  std::vector<double> values(n);
  const std::size_t pixels = side * side;
  for (std::size_t t = 0; t < samples; ++t) {
    for (std::size_t px = 0; px < pixels; ++px) {
      double sum = 0.0;
      std::vector<double> raw(static_cast<std::size_t>(classes));
      for (auto& v : raw) {
        v = static_cast<double>(rng() >> 11) * 0x1.0p-53 + 1e-9;
        sum += v;
      }
      for (std::int32_t c = 0; c < classes; ++c)
        values[(t * static_cast<std::size_t>(classes) +
                static_cast<std::size_t>(c)) *
                   pixels +
               px] = raw[static_cast<std::size_t>(c)] / sum;
    }
  }
  return ueval::ProbStack(samples, classes, side, side, std::move(values));
}

void BM_PredictiveEntropy(benchmark::State& state) {
  const auto stack = make_stack(static_cast<std::size_t>(state.range(0)), 8,
                                static_cast<std::size_t>(state.range(1)));
  for (auto _ : state) {
    auto map = ueval::predictive_entropy(stack);
    benchmark::DoNotOptimize(map);
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) *
                          static_cast<std::int64_t>(stack.pixel_count()));
}

void BM_MutualInformation(benchmark::State& state) {
  const auto stack = make_stack(static_cast<std::size_t>(state.range(0)), 8,
                                static_cast<std::size_t>(state.range(1)));
  for (auto _ : state) {
    auto map = ueval::mutual_information(stack);
    benchmark::DoNotOptimize(map);
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) *
                          static_cast<std::int64_t>(stack.pixel_count()));
}

void BM_ArgmaxPrediction(benchmark::State& state) {
  const auto stack = make_stack(static_cast<std::size_t>(state.range(0)), 8,
                                static_cast<std::size_t>(state.range(1)));
  for (auto _ : state) {
    auto pred = ueval::argmax_prediction(stack);
    benchmark::DoNotOptimize(pred);
  }
}

}  // namespace

BENCHMARK(BM_PredictiveEntropy)->Args({8, 128})->Args({8, 256})->Args({32, 128});
BENCHMARK(BM_MutualInformation)->Args({8, 128})->Args({8, 256})->Args({32, 128});
BENCHMARK(BM_ArgmaxPrediction)->Args({8, 128})->Args({32, 128});

BENCHMARK_MAIN();
