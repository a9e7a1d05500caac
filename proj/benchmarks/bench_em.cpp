// SPDX-License-Identifier: Apache-2.0
#include <benchmark/benchmark.h>

#include "graphlog/global_em.hpp"

using namespace graphlog;

namespace {

PrototypeForest demo_forest(uint32_t depth, uint32_t top, size_t d) {
  PrototypeForest f;
  f.depth = depth;
  f.layers.resize(depth);
  f.parent.resize(depth);
  f.children.resize(depth);
  Rng rng(1);
  uint32_t width = top;
  for (uint32_t l = 0; l < depth; ++l) {
    auto t = Tensor::zeros(width, d, DType::f64, true);
    for (size_t i = 0; i < t->size(); ++i) t->set_value(i, rng.uniform(-1, 1));
    f.layers[l] = t;
    if (l > 0) {
      const uint32_t parents = f.layer_size(l - 1);
      f.parent[l].resize(width);
      f.children[l - 1].assign(parents, {});
      for (uint32_t i = 0; i < width; ++i) {
        f.parent[l][i] = i % parents;
        f.children[l - 1][i % parents].push_back(i);
      }
    }
    width *= 2;
  }
  return f;
}

void BM_EStepSample(benchmark::State& state) {
  auto f = demo_forest(3, static_cast<uint32_t>(state.range(0)), 64);
  Rng rng(2);
  std::vector<double> h(64);
  for (auto& x : h) x = rng.uniform(-1, 1);
  for (auto _ : state) {
    auto chain = e_step_sample(h, f, 1.0, rng);
    benchmark::DoNotOptimize(chain.indices[0]);
  }
}

void BM_NceGlobalLoss(benchmark::State& state) {
  const size_t n = static_cast<size_t>(state.range(0));
  auto f = demo_forest(3, 4, 64);
  Rng rng(3);
  auto h = Tensor::zeros(n, 64, DType::f64, true);
  for (size_t i = 0; i < h->size(); ++i) h->set_value(i, rng.uniform(-1, 1));
  std::vector<LatentChain> chains;
  for (size_t i = 0; i < n; ++i) {
    std::vector<double> row(64);
    h->copy_row_to(i, row);
    chains.push_back(e_step_sample(row, f, 1.0, rng));
  }
  for (auto _ : state) {
    Tape tape;
    Rng nr(4);
    auto loss = nce_global_loss(tape, h, chains, f, false, nr);
    tape.backward(loss);
    benchmark::DoNotOptimize(h->grad(0));
    h->zero_grad();
    for (auto& layer : f.layers) layer->zero_grad();
  }
  state.SetItemsProcessed(state.iterations() * n);
}

}  // namespace

BENCHMARK(BM_EStepSample)->Arg(4)->Arg(50);
BENCHMARK(BM_NceGlobalLoss)->Arg(64)->Arg(512);
