// Parallel vs serial sketching kernels, plus the exact solver for scale.

#include <map>

#include <benchmark/benchmark.h>

#include "fastcca/cca.hpp"
#include "fastcca/transforms.hpp"
#include "fastcca/verifier.hpp"

using namespace fastcca;

namespace {

const DenseMatrix& input(Index m, Index n) {
  static std::map<std::pair<Index, Index>, DenseMatrix> cache;
  auto it = cache.find({m, n});
  if (it == cache.end()) it = cache.emplace(std::pair{m, n}, DenseMatrix(gaussian_matrix(m, n, 1, 500))).first;
  return it->second;
}

void sketch(benchmark::State& state, SketchKind kind, Exec exec) {
  const Index m = state.range(0), n = state.range(1);
  const DenseMatrix& x = input(m, n);
  const auto op = SketchOperator::realize(kind, m, m / 8, 3);
  for (auto _ : state) benchmark::DoNotOptimize(op.apply(x, exec));
  state.SetItemsProcessed(state.iterations() * m * n);
}

void wht_bench(benchmark::State& state, Exec exec) {
  const DenseMatrix& x = input(state.range(0), state.range(1));
  for (auto _ : state) benchmark::DoNotOptimize(wht(x, exec));
}

void exact(benchmark::State& state) {
  const DenseMatrix& a = input(state.range(0), state.range(1));
  const DenseMatrix b(gaussian_matrix(state.range(0), state.range(1), 2, 500));
  for (auto _ : state) benchmark::DoNotOptimize(exact_cca(a, b));
}

void shapes(benchmark::internal::Benchmark* b) {
  b->Args({1 << 14, 16})->Args({1 << 17, 60})->Unit(benchmark::kMillisecond);
}

}  // namespace

BENCHMARK_CAPTURE(sketch, srht_parallel, SketchKind::srht, Exec::parallel)->Apply(shapes);
BENCHMARK_CAPTURE(sketch, srht_serial, SketchKind::srht, Exec::serial)->Apply(shapes);
BENCHMARK_CAPTURE(sketch, countsketch_parallel, SketchKind::countsketch, Exec::parallel)->Apply(shapes);
BENCHMARK_CAPTURE(sketch, countsketch_serial, SketchKind::countsketch, Exec::serial)->Apply(shapes);
BENCHMARK_CAPTURE(sketch, uniform_parallel, SketchKind::uniform, Exec::parallel)->Apply(shapes);
BENCHMARK_CAPTURE(sketch, uniform_serial, SketchKind::uniform, Exec::serial)->Apply(shapes);
BENCHMARK_CAPTURE(wht_bench, parallel, Exec::parallel)->Apply(shapes);
BENCHMARK_CAPTURE(wht_bench, serial, Exec::serial)->Apply(shapes);
BENCHMARK(exact)->Apply(shapes);

BENCHMARK_MAIN();
