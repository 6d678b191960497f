#include <benchmark/benchmark.h>

#include "afenet/dct.hpp"
#include "afenet/metrics.hpp"
#include "afenet/ops.hpp"
#include "afenet/rng.hpp"

using namespace afenet;

namespace {

Tensor filled(Shape s, std::uint64_t seed) {
  Rng rng(seed);
  Tensor t(s);
  for (double& v : t.values()) v = rng.uniform(-1.0, 1.0);
  return t;
}

Plane plane(std::int64_t n, std::uint64_t seed) {
  Rng rng(seed);
  Plane p{n, n, {}};
  for (std::int64_t i = 0; i < n * n; ++i) p.values.push_back(rng.uniform(0.0, 255.0));
  return p;
}

}  // namespace

// 3x3 convolution, C -> C channels on a 64 x 64 map.
static void BM_Conv3x3(benchmark::State& state) {
  const std::int64_t c = state.range(0);
  const Var x = Var::constant(filled(Shape{1, c, 64, 64}, 1));
  const Var w = Var::constant(filled(Shape{c, c, 3, 3}, 2));
  const Var b = Var::constant(filled(Shape{c, 1, 1, 1}, 3));
  NoGradGuard guard;
  for (auto _ : state) benchmark::DoNotOptimize(ops::conv2d(x, w, b, 1));
  state.SetItemsProcessed(state.iterations() * c * c * 9 * 64 * 64);
}
BENCHMARK(BM_Conv3x3)->Arg(8)->Arg(16)->Arg(32);

static void BM_Depthwise3x3(benchmark::State& state) {
  const std::int64_t c = state.range(0);
  const Var x = Var::constant(filled(Shape{1, c, 64, 64}, 1));
  const Var w = Var::constant(filled(Shape{c, 1, 3, 3}, 2));
  NoGradGuard guard;
  for (auto _ : state) benchmark::DoNotOptimize(ops::depthwise_conv2d(x, w, Var(), 1));
}
BENCHMARK(BM_Depthwise3x3)->Arg(16)->Arg(43);

// Forward and backward through a convolution.
static void BM_Conv3x3Backward(benchmark::State& state) {
  const Tensor xt = filled(Shape{4, 16, 64, 64}, 1);
  const Tensor wt = filled(Shape{16, 16, 3, 3}, 2);
  for (auto _ : state) {
    Var x = Var::leaf(xt);
    Var w = Var::leaf(wt);
    backward(ops::sum(ops::conv2d(x, w, Var(), 1)));
    benchmark::DoNotOptimize(w.grad().data());
  }
}
BENCHMARK(BM_Conv3x3Backward);

static void BM_Dct2(benchmark::State& state) {
  const Plane p = plane(state.range(0), 4);
  for (auto _ : state) benchmark::DoNotOptimize(dct2(p));
}
BENCHMARK(BM_Dct2)->Arg(64)->Arg(96)->Arg(256);

static void BM_Ssim(benchmark::State& state) {
  const Plane a = plane(state.range(0), 5), b = plane(state.range(0), 6);
  for (auto _ : state) benchmark::DoNotOptimize(ssim(a, b));
}
BENCHMARK(BM_Ssim)->Arg(96)->Arg(256);
