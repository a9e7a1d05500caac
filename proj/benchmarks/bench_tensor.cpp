// SPDX-License-Identifier: Apache-2.0
#include <benchmark/benchmark.h>

#include "graphlog/rng.hpp"
#include "graphlog/tensor.hpp"

using namespace graphlog;

namespace {

TensorPtr random_tensor(size_t r, size_t c, Rng& rng, bool grad) {
  auto t = Tensor::zeros(r, c, DType::f64, grad);
  for (size_t i = 0; i < t->size(); ++i) t->set_value(i, rng.uniform(-1, 1));
  return t;
}

void BM_MatmulForward(benchmark::State& state) {
  const size_t n = static_cast<size_t>(state.range(0));
  Rng rng(1);
  auto a = random_tensor(n, n, rng, false);
  auto b = random_tensor(n, n, rng, false);
  Tape tape;
  for (auto _ : state) {
    auto c = tape.matmul(a, b);
    benchmark::DoNotOptimize(c->value(0));
    tape.clear();
  }
  state.SetItemsProcessed(state.iterations() * n * n * n);
}

void BM_MatmulBackward(benchmark::State& state) {
  const size_t n = static_cast<size_t>(state.range(0));
  Rng rng(2);
  auto a = random_tensor(n, n, rng, true);
  auto b = random_tensor(n, n, rng, true);
  auto ones = Tensor::zeros(1, n, DType::f64);
  for (size_t i = 0; i < n; ++i) ones->set_value(i, 1.0);
  for (auto _ : state) {
    Tape tape;
    auto c = tape.matmul(a, b);
    auto loss = tape.dot_rows(tape.mean_rows(c), ones);
    tape.backward(loss);
    benchmark::DoNotOptimize(a->grad(0));
    a->zero_grad();
    b->zero_grad();
  }
}

void BM_CosineRows(benchmark::State& state) {
  const size_t n = static_cast<size_t>(state.range(0));
  Rng rng(3);
  auto a = random_tensor(n, 64, rng, false);
  auto b = random_tensor(n, 64, rng, false);
  Tape tape;
  for (auto _ : state) {
    auto c = tape.cosine_rows(a, b);
    benchmark::DoNotOptimize(c->value(0));
    tape.clear();
  }
  state.SetItemsProcessed(state.iterations() * n);
}

}  // namespace

BENCHMARK(BM_MatmulForward)->Arg(64)->Arg(128)->Arg(300);
BENCHMARK(BM_MatmulBackward)->Arg(64)->Arg(128);
BENCHMARK(BM_CosineRows)->Arg(512)->Arg(4096);
