// SPDX-License-Identifier: Apache-2.0
#include "graphlog/gin.hpp"

#include <cmath>
#include <string>

#include "graphlog/errors.hpp"

namespace graphlog {

GinParams GinParams::init(const GnnConfig& cfg, const std::vector<int32_t>& node_vocab,
                          const std::vector<int32_t>& edge_vocab, DType dtype,
                          const Rng& rng) {
  if (cfg.layers == 0) throw std::invalid_argument("GinParams: layers must be >= 1");
  GinParams p;
  p.layers = cfg.layers;
  p.hidden_dim = cfg.hidden_dim;
  p.node_vocab = node_vocab;
  p.edge_vocab = edge_vocab;
  const size_t d = cfg.hidden_dim;

  auto init_table = [&](int32_t vocab, Rng r) {
    auto t = Tensor::zeros(static_cast<size_t>(vocab) + 1, d, dtype, true);
    for (size_t i = 0; i < t->size(); ++i) t->set_value(i, r.normal(0.0, 0.02));
    return t;
  };
  auto init_affine = [&](size_t rows, size_t cols, Rng r) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(d));
    auto t = Tensor::zeros(rows, cols, dtype, true);
    for (size_t i = 0; i < t->size(); ++i) t->set_value(i, r.uniform(-bound, bound));
    return t;
  };

  for (size_t s = 0; s < node_vocab.size(); ++s) {
    p.node_tables.push_back(init_table(node_vocab[s], rng.fork("gin_node_table", s)));
  }
  for (size_t s = 0; s < edge_vocab.size(); ++s) {
    p.edge_tables.push_back(init_table(edge_vocab[s], rng.fork("gin_edge_table", s)));
  }
  for (uint32_t l = 0; l < cfg.layers; ++l) {
    Mlp m;
    m.w1 = init_affine(d, d, rng.fork("gin_w1", l));
    m.b1 = init_affine(1, d, rng.fork("gin_b1", l));
    m.w2 = init_affine(d, d, rng.fork("gin_w2", l));
    m.b2 = init_affine(1, d, rng.fork("gin_b2", l));
    p.mlps.push_back(std::move(m));
  }
  return p;
}

std::vector<TensorPtr> GinParams::parameters() const {
  std::vector<TensorPtr> out;
  for (const auto& t : node_tables) out.push_back(t);
  for (const auto& t : edge_tables) out.push_back(t);
  for (const auto& m : mlps) {
    out.push_back(m.w1);
    out.push_back(m.b1);
    out.push_back(m.w2);
    out.push_back(m.b2);
  }
  return out;
}

namespace {

void check_attr_ranges(const GraphBatch& b, const GinParams& p) {
  if (b.node_vocab != p.node_vocab || b.edge_vocab != p.edge_vocab) {
    throw DataError("encode: batch vocabulary does not match encoder tables");
  }
  const size_t ns = b.node_slots();
  for (uint32_t v = 0; v < b.total_nodes; ++v) {
    for (size_t s = 0; s < ns; ++s) {
      const int32_t a = b.node_attrs[v * ns + s];
      if (a < 0 || a > b.node_vocab[s]) {
        throw DataError("encode: node " + std::to_string(v) + " slot " + std::to_string(s) +
                        " attribute " + std::to_string(a) + " out of range (vocabulary " +
                        std::to_string(b.node_vocab[s]) + " + mask index)");
      }
    }
  }
  const size_t es = b.edge_slots();
  for (size_t e = 0; e < b.edge_src.size(); ++e) {
    for (size_t s = 0; s < es; ++s) {
      const int32_t a = b.edge_attrs[e * es + s];
      if (a < 0 || a > b.edge_vocab[s]) {
        throw DataError("encode: edge " + std::to_string(e) + " slot " + std::to_string(s) +
                        " attribute " + std::to_string(a) + " out of range (vocabulary " +
                        std::to_string(b.edge_vocab[s]) + " + mask index)");
      }
    }
  }
}

}  // namespace

Encoded encode(const GraphBatch& b, const GinParams& p, Tape& tape) {
  check_attr_ranges(b, p);
  const size_t ns = b.node_slots();
  const size_t es = b.edge_slots();
  const size_t num_edges = b.edge_src.size();

  // h^(0): summed table rows across node attribute slots.
  TensorPtr h;
  std::vector<int64_t> idx(b.total_nodes);
  for (size_t s = 0; s < ns; ++s) {
    for (uint32_t v = 0; v < b.total_nodes; ++v) {
      idx[v] = b.node_attrs[v * ns + s];
    }
    auto rows = tape.row_gather(p.node_tables[s], idx);
    h = h ? tape.add(h, rows) : rows;
  }
  if (!h) throw DataError("encode: batch declares no node attribute slots");

  // Summed edge features, shared by every layer.
  TensorPtr e;
  if (num_edges > 0) {
    std::vector<int64_t> eidx(num_edges);
    for (size_t s = 0; s < es; ++s) {
      for (size_t k = 0; k < num_edges; ++k) {
        eidx[k] = b.edge_attrs[k * es + s];
      }
      auto rows = tape.row_gather(p.edge_tables[s], eidx);
      e = e ? tape.add(e, rows) : rows;
    }
  }

  std::vector<int64_t> src(num_edges), dst(num_edges);
  for (size_t k = 0; k < num_edges; ++k) {
    src[k] = b.edge_src[k];
    dst[k] = b.edge_dst[k];
  }

  for (uint32_t l = 0; l < p.layers; ++l) {
    TensorPtr z = h;
    if (num_edges > 0) {
      auto msgs = tape.row_gather(h, src);
      if (e) msgs = tape.add(msgs, e);
      auto agg = tape.row_scatter_add(msgs, dst, b.total_nodes);
      z = tape.add(h, agg);
    }
    const auto& m = p.mlps[l];
    auto y = tape.relu(tape.add(tape.matmul(z, m.w1), m.b1));
    h = tape.add(tape.matmul(y, m.w2), m.b2);
  }

  std::vector<int64_t> node_to_graph(b.total_nodes);
  for (uint32_t v = 0; v < b.total_nodes; ++v) node_to_graph[v] = b.node_to_graph[v];
  auto sums = tape.row_scatter_add(h, node_to_graph, b.num_graphs);
  std::vector<double> inv_counts(b.num_graphs);
  for (uint32_t g = 0; g < b.num_graphs; ++g) {
    inv_counts[g] = 1.0 / static_cast<double>(b.nodes_in_graph(g));
  }
  auto means = tape.scale_rows(sums, inv_counts);
  return Encoded{h, means};
}

std::vector<std::vector<double>> encode_graph_embeddings(const GraphBatch& batch,
                                                         const GinParams& params) {
  Tape tape(false);
  Encoded enc = encode(batch, params, tape);
  std::vector<std::vector<double>> out(batch.num_graphs);
  for (uint32_t g = 0; g < batch.num_graphs; ++g) {
    enc.graph_embeddings->copy_row_to(g, out[g]);
  }
  tape.clear();
  return out;
}

}  // namespace graphlog
