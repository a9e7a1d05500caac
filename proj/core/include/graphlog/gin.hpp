// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <vector>

#include "graphlog/config.hpp"
#include "graphlog/graph.hpp"
#include "graphlog/rng.hpp"
#include "graphlog/tensor.hpp"

namespace graphlog {

// L-layer GIN with categorical embedding tables and mean-pooling readout.
// Aggregation is eps = 0 sum with edge embeddings added to neighbor
// messages; each layer applies a two-affine MLP with a rectifier between.
struct GinParams {
  uint32_t layers = 0;
  uint32_t hidden_dim = 0;
  std::vector<int32_t> node_vocab;  // declared vocabularies; tables have vocab+1 rows
  std::vector<int32_t> edge_vocab;
  std::vector<TensorPtr> node_tables;
  std::vector<TensorPtr> edge_tables;
  struct Mlp {
    TensorPtr w1, b1, w2, b2;
  };
  std::vector<Mlp> mlps;

  // Embedding tables ~ N(0, 0.02), affine maps ~ U(-1/sqrt(d), 1/sqrt(d)).
  static GinParams init(const GnnConfig& cfg, const std::vector<int32_t>& node_vocab,
                        const std::vector<int32_t>& edge_vocab, DType dtype, const Rng& rng);

  // All trainable tensors in declaration order: node tables, edge tables,
  // then per layer w1, b1, w2, b2. Checkpoints and optimizer state follow
  // this order.
  std::vector<TensorPtr> parameters() const;
};

struct Encoded {
  TensorPtr node_embeddings;   // total_nodes x d; final-layer subgraph embeddings
  TensorPtr graph_embeddings;  // num_graphs x d; per-graph mean of node rows
};

// Differentiable forward pass on the given tape.
Encoded encode(const GraphBatch& batch, const GinParams& params, Tape& tape);

// Graph embeddings only, without recording gradients.
std::vector<std::vector<double>> encode_graph_embeddings(const GraphBatch& batch,
                                                         const GinParams& params);

}  // namespace graphlog
