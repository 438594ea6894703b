#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "ueval/patch_eval.hpp"
#include "ueval/tensor.hpp"

namespace {

struct Inputs {
  ueval::ClassMap pred;
  ueval::ClassMap gt;
  ueval::ScalarMap umap;
};

Inputs make_inputs(std::size_t side) {
  std::mt19937_64 rng(7);
  const auto draw = [&](std::size_t n, std::int32_t classes) {
    std::vector<std::int32_t> v(n);
    for (auto& x : v)
      x = static_cast<std::int32_t>(
          (static_cast<unsigned __int128>(rng()) *
           static_cast<std::size_t>(classes)) >>
          64);
    return v;
  };
  std::vector<double> u(side * side);
  for (auto& x : u) x = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return Inputs{
      ueval::ClassMap(side, side, 19, draw(side * side, 19)),
      ueval::ClassMap(side, side, 19, draw(side * side, 19)),
      ueval::ScalarMap(side, side, std::move(u)),
  };
}

void BM_ClassifyPatches(benchmark::State& state) {
  const auto inputs = make_inputs(static_cast<std::size_t>(state.range(0)));
  ueval::PatchConfig cfg;
  for (auto _ : state) {
    auto conf = ueval::classify_patches(inputs.pred, inputs.gt, inputs.umap,
                                        cfg, 0.5);
    benchmark::DoNotOptimize(conf);
  }
  state.SetItemsProcessed(
      static_cast<std::int64_t>(state.iterations()) *
      static_cast<std::int64_t>(inputs.gt.pixel_count()));
}

void BM_ThresholdSweep(benchmark::State& state) {
  const auto inputs = make_inputs(static_cast<std::size_t>(state.range(0)));
  ueval::PatchConfig cfg;
  const auto grid = ueval::uniform_t_grid(11);
  for (auto _ : state) {
    auto curve =
        ueval::threshold_sweep(inputs.pred, inputs.gt, inputs.umap, cfg, grid);
    benchmark::DoNotOptimize(curve);
  }
}

}  // namespace

BENCHMARK(BM_ClassifyPatches)->Arg(256)->Arg(512)->Arg(1024);
BENCHMARK(BM_ThresholdSweep)->Arg(256)->Arg(512);

BENCHMARK_MAIN();
