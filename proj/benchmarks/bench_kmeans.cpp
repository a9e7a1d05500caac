// SPDX-License-Identifier: Apache-2.0
#include <benchmark/benchmark.h>

#include "graphlog/forest.hpp"

using namespace graphlog;

namespace {

void BM_KMeans(benchmark::State& state) {
  const size_t m = static_cast<size_t>(state.range(0));
  const uint32_t k = static_cast<uint32_t>(state.range(1));
  Rng data_rng(1);
  std::vector<std::vector<double>> pts(m, std::vector<double>(64));
  for (auto& p : pts) {
    for (auto& x : p) x = data_rng.uniform(-1, 1);
  }
  for (auto _ : state) {
    Rng rng(2);
    auto res = kmeans(pts, k, rng);
    benchmark::DoNotOptimize(res.sse);
  }
  state.SetItemsProcessed(state.iterations() * m);
}

void BM_InitForest(benchmark::State& state) {
  Rng data_rng(3);
  std::vector<std::vector<double>> emb(800, std::vector<double>(64));
  for (auto& p : emb) {
    for (auto& x : p) x = data_rng.uniform(-1, 1);
  }
  TrainConfig cfg;
  cfg.forest_depth = 2;
  cfg.k_per_layer = {4, 8};
  for (auto _ : state) {
    Rng rng(4);
    auto forest = init_forest(emb, cfg, rng);
    benchmark::DoNotOptimize(forest.layers[0]->value(0));
  }
}

}  // namespace

BENCHMARK(BM_KMeans)->Args({800, 8})->Args({800, 50})->Args({5000, 50});
BENCHMARK(BM_InitForest);
