// SPDX-License-Identifier: Apache-2.0
#include <benchmark/benchmark.h>

#include "graphlog/data_io.hpp"
#include "graphlog/gin.hpp"

using namespace graphlog;

namespace {

// Forward (and optionally backward) pass over one desk-scale batch.
void BM_EncodeBatch(benchmark::State& state) {
  SyntheticSpec spec;
  spec.graphs_per_leaf = 8;
  Dataset ds = generate_synthetic(spec);
  std::vector<const Graph*> graphs;
  for (size_t i = 0; i < static_cast<size_t>(state.range(0)); ++i) {
    graphs.push_back(&ds.graphs[i % ds.graphs.size()]);
  }
  auto batch = make_batch(graphs);
  GnnConfig cfg{3, static_cast<uint32_t>(state.range(1))};
  auto params = GinParams::init(cfg, ds.manifest.node_vocab, ds.manifest.edge_vocab,
                                DType::f64, Rng(1));
  for (auto _ : state) {
    Tape tape;
    auto enc = encode(batch, params, tape);
    benchmark::DoNotOptimize(enc.graph_embeddings->value(0));
    tape.clear();
  }
  state.SetItemsProcessed(state.iterations() * batch.total_nodes);
}

void BM_EncodeBackward(benchmark::State& state) {
  SyntheticSpec spec;
  spec.graphs_per_leaf = 8;
  Dataset ds = generate_synthetic(spec);
  std::vector<const Graph*> graphs;
  for (size_t i = 0; i < 64; ++i) graphs.push_back(&ds.graphs[i]);
  auto batch = make_batch(graphs);
  GnnConfig cfg{3, static_cast<uint32_t>(state.range(0))};
  auto params = GinParams::init(cfg, ds.manifest.node_vocab, ds.manifest.edge_vocab,
                                DType::f64, Rng(2));
  auto ones = Tensor::zeros(1, cfg.hidden_dim, DType::f64);
  for (size_t i = 0; i < cfg.hidden_dim; ++i) ones->set_value(i, 1.0);
  for (auto _ : state) {
    Tape tape;
    auto enc = encode(batch, params, tape);
    auto loss = tape.dot_rows(tape.mean_rows(enc.graph_embeddings), ones);
    tape.backward(loss);
    benchmark::DoNotOptimize(params.mlps[0].w1->grad(0));
    for (auto& p : params.parameters()) p->zero_grad();
  }
}

}  // namespace

BENCHMARK(BM_EncodeBatch)->Args({64, 64})->Args({64, 300})->Args({512, 64});
BENCHMARK(BM_EncodeBackward)->Arg(64)->Arg(300);
