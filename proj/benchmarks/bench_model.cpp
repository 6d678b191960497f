#include <benchmark/benchmark.h>

#include "afenet/dataset.hpp"
#include "afenet/model.hpp"
#include "afenet/training.hpp"

using namespace afenet;

namespace {

ModelConfig desk_model() {
  ModelConfig m = ModelConfig::desk();
  m.blocks_per_band = 2;
  m.fam_depth = 1;
  m.zero_init_head = false;
  return m;
}

}  // namespace

// Inference on one image of side range(0).
static void BM_ModelInfer(benchmark::State& state) {
  const Afenet model(desk_model());
  const std::int64_t n = state.range(0);
  const Tensor x(Shape{1, 3, n, n}, 0.4);
  for (auto _ : state) benchmark::DoNotOptimize(model.infer(x));
}
BENCHMARK(BM_ModelInfer)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

// One optimisation step at the desk training shape (batch 4, 64 x 64).
static void BM_TrainStep(benchmark::State& state) {
  const auto data = make_synthetic_pairs(8, 96, 96, 1);
  Afenet model(desk_model());
  TrainConfig cfg = TrainConfig::desk();
  cfg.total_iters = 1;
  for (auto _ : state) benchmark::DoNotOptimize(train(model, data, cfg).log.back().loss);
}
BENCHMARK(BM_TrainStep)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
