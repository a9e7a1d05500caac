// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "graphlog/config.hpp"
#include "graphlog/graph.hpp"
#include "graphlog/rng.hpp"
#include "graphlog/tensor.hpp"

namespace graphlog {

// Embeddings of a correlated batch pair (G, G'). Rows correspond one-to-one:
// index i in the plain tensors and index i in the primed tensors form a
// correlated pair.
struct LocalBatchView {
  TensorPtr graph_emb;        // N x d
  TensorPtr graph_emb_prime;  // N x d
  TensorPtr node_emb;         // total_nodes x d
  TensorPtr node_emb_prime;   // total_nodes x d
  const GraphBatch* batch = nullptr;
};

// Mean over positives of s(neg) - s(pos), where the positive pair is
// (G_i, G'_i) and each negative replaces graph i's embedding with that of a
// uniformly chosen j != i from the batch; k_neg negatives per positive.
// Requires N >= 2.
TensorPtr graph_loss(Tape& tape, const LocalBatchView& view, uint32_t k_neg, Rng& rng);

// Node-level counterpart: positives pair node u in G with u in G'; negatives
// pair u in G with w != u in G' of the same graph. Graphs with a single node
// fall back to drawing w from another graph in the batch. At most
// nodes_per_graph node positives are sampled per graph.
TensorPtr subgraph_loss(Tape& tape, const LocalBatchView& view, uint32_t k_neg,
                        uint32_t nodes_per_graph, Rng& rng);

// Sum of the enabled components (cfg.loss_graph / cfg.loss_sub).
TensorPtr local_loss(Tape& tape, const LocalBatchView& view, const TrainConfig& cfg, Rng& rng);

}  // namespace graphlog
