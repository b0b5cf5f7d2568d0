#include <benchmark/benchmark.h>

#include <cmath>
#include <vector>

#include "pseudocam/instances.hpp"
#include "pseudocam/kmeans.hpp"
#include "pseudocam/model.hpp"
#include "pseudocam/rng.hpp"

using namespace pseudocam;

namespace {

Matrix gaussian(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  Rng rng(seed);
  Matrix m(rows, cols);
  for (auto& x : m.data) x = rng.normal();
  return m;
}

void unit_rows(Matrix& m) {
  for (std::size_t r = 0; r < m.rows; ++r) {
    double n = 0;
    for (double v : m.row(r)) n += v * v;
    n = std::sqrt(n);
    for (double& v : m.row(r)) v /= n;
  }
}

std::vector<ModelInput> batch_of(std::size_t n, std::size_t d_f) {
  std::vector<ModelInput> batch;
  for (std::size_t i = 0; i < n; ++i) {
    ModelInput in;
    in.past = gaussian(kPastFrames, d_f, 2 * i);
    unit_rows(in.past);
    for (std::size_t r = 0; r < kPastFrames; ++r) in.offsets.push_back(1 + 5 * static_cast<long>(r));
    in.candidates = gaussian(6, d_f, 2 * i + 1);
    unit_rows(in.candidates);
    in.gt_index = static_cast<int>(i % 6);
    batch.push_back(std::move(in));
  }
  return batch;
}

void BM_NearestCentroidsSerial(benchmark::State& state) {
  const auto points = gaussian(static_cast<std::size_t>(state.range(0)), 128, 1);
  const auto centroids = gaussian(6, 128, 2);
  for (auto _ : state) benchmark::DoNotOptimize(nearest_centroids_serial(points, centroids));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_NearestCentroidsParallel(benchmark::State& state) {
  const auto points = gaussian(static_cast<std::size_t>(state.range(0)), 128, 1);
  const auto centroids = gaussian(6, 128, 2);
  for (auto _ : state) benchmark::DoNotOptimize(nearest_centroids(points, centroids));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_BatchGradientSerial(benchmark::State& state) {
  const auto batch = batch_of(static_cast<std::size_t>(state.range(0)), 128);
  const auto p = ModelParams::initialize({128, 64, 256, 6, 1}, 0.07, 0);
  for (auto _ : state) benchmark::DoNotOptimize(batch_gradient_serial(batch, p));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_BatchGradientParallel(benchmark::State& state) {
  const auto batch = batch_of(static_cast<std::size_t>(state.range(0)), 128);
  const auto p = ModelParams::initialize({128, 64, 256, 6, 1}, 0.07, 0);
  for (auto _ : state) benchmark::DoNotOptimize(batch_gradient(batch, p));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

}  // namespace

BENCHMARK(BM_NearestCentroidsSerial)->Arg(1000)->Arg(20000)->UseRealTime();
BENCHMARK(BM_NearestCentroidsParallel)->Arg(1000)->Arg(20000)->UseRealTime();
BENCHMARK(BM_BatchGradientSerial)->Arg(8)->Arg(64)->UseRealTime();
BENCHMARK(BM_BatchGradientParallel)->Arg(8)->Arg(64)->UseRealTime();

BENCHMARK_MAIN();
