// SPDX-License-Identifier: Apache-2.0
#include "graphlog/local_loss.hpp"

#include <stdexcept>

namespace graphlog {

TensorPtr graph_loss(Tape& tape, const LocalBatchView& view, uint32_t k_neg, Rng& rng) {
  const size_t n = view.graph_emb->rows();
  if (n < 2) {
    throw std::invalid_argument("graph_loss: batch of " + std::to_string(n) +
                                " has no in-batch negative");
  }
  auto pos = tape.cosine_rows(view.graph_emb, view.graph_emb_prime);
  auto pos_mean = tape.mean_rows(pos);

  std::vector<int64_t> neg_first, neg_second;
  neg_first.reserve(n * k_neg);
  neg_second.reserve(n * k_neg);
  for (size_t i = 0; i < n; ++i) {
    for (uint32_t k = 0; k < k_neg; ++k) {
      neg_first.push_back(static_cast<int64_t>(rng.below_excluding(n, i)));
      neg_second.push_back(static_cast<int64_t>(i));
    }
  }
  auto neg = tape.cosine_rows(tape.row_gather(view.graph_emb, neg_first),
                              tape.row_gather(view.graph_emb_prime, neg_second));
  auto neg_mean = tape.mean_rows(neg);
  return tape.subtract(neg_mean, pos_mean);
}

TensorPtr subgraph_loss(Tape& tape, const LocalBatchView& view, uint32_t k_neg,
                        uint32_t nodes_per_graph, Rng& rng) {
  const GraphBatch& b = *view.batch;
  std::vector<int64_t> pos_idx;          // node positives (same index both sides)
  std::vector<int64_t> neg_u, neg_w;     // negative pairs (u in G, w in G')

  for (uint32_t g = 0; g < b.num_graphs; ++g) {
    const uint32_t lo = b.graph_offsets[g];
    const uint32_t count = b.nodes_in_graph(g);
    const uint32_t picks = std::min(count, nodes_per_graph);
    std::vector<uint32_t> sampled;
    if (picks == count) {
      for (uint32_t v = 0; v < count; ++v) sampled.push_back(v);
    } else {
      sampled = rng.sample_without_replacement(count, picks);
    }
    for (uint32_t local_u : sampled) {
      const uint32_t u = lo + local_u;
      pos_idx.push_back(u);
      for (uint32_t k = 0; k < k_neg; ++k) {
        if (count >= 2) {
          const uint32_t w = lo + static_cast<uint32_t>(rng.below_excluding(count, local_u));
          neg_u.push_back(u);
          neg_w.push_back(w);
        } else {
          // Single-node graph: draw the counterpart from another graph.
          if (b.total_nodes <= count) {
            throw std::invalid_argument(
                "subgraph_loss: no negative available (batch has a single one-node graph)");
          }
          uint32_t w = static_cast<uint32_t>(rng.below(b.total_nodes - count));
          if (w >= lo) w += count;  // skip this graph's node range
          neg_u.push_back(u);
          neg_w.push_back(w);
        }
      }
    }
  }

  auto pos = tape.cosine_rows(tape.row_gather(view.node_emb, pos_idx),
                              tape.row_gather(view.node_emb_prime, pos_idx));
  auto pos_mean = tape.mean_rows(pos);
  auto neg = tape.cosine_rows(tape.row_gather(view.node_emb, neg_u),
                              tape.row_gather(view.node_emb_prime, neg_w));
  auto neg_mean = tape.mean_rows(neg);
  return tape.subtract(neg_mean, pos_mean);
}

TensorPtr local_loss(Tape& tape, const LocalBatchView& view, const TrainConfig& cfg, Rng& rng) {
  TensorPtr total;
  if (cfg.loss_graph) {
    total = graph_loss(tape, view, cfg.k_neg, rng);
  }
  if (cfg.loss_sub) {
    auto sub = subgraph_loss(tape, view, cfg.k_neg, cfg.nodes_per_graph, rng);
    total = total ? tape.add(total, sub) : sub;
  }
  if (!total) {
    throw std::invalid_argument("local_loss: both components disabled");
  }
  return total;
}

}  // namespace graphlog
