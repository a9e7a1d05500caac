// SPDX-License-Identifier: Apache-2.0
#include "graphlog/graph.hpp"

#include <cmath>
#include <string>

#include "graphlog/errors.hpp"

namespace graphlog {

const char* split_name(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::valid: return "valid";
    case Split::test: return "test";
    default: return "none";
  }
}

Split split_from_name(const std::string& s) {
  if (s == "train") return Split::train;
  if (s == "valid") return Split::valid;
  if (s == "test") return Split::test;
  if (s == "none" || s.empty()) return Split::none;
  throw DataError("unknown split tag '" + s + "'");
}

void Graph::add_undirected_edge(uint32_t u, uint32_t v, const std::vector<int32_t>& attrs) {
  if (attrs.size() != edge_slots()) {
    throw DataError("edge attribute count " + std::to_string(attrs.size()) +
                    " != declared slots " + std::to_string(edge_slots()));
  }
  edge_src.push_back(u);
  edge_dst.push_back(v);
  edge_src.push_back(v);
  edge_dst.push_back(u);
  edge_attrs.insert(edge_attrs.end(), attrs.begin(), attrs.end());
  edge_attrs.insert(edge_attrs.end(), attrs.begin(), attrs.end());
}

void validate_graph(const Graph& g, const std::string& name) {
  auto fail = [&](const std::string& msg) { throw DataError(name + ": " + msg); };
  if (g.edge_src.size() != g.edge_dst.size()) fail("edge arrays disagree in length");
  if (g.edge_src.size() % 2 != 0) fail("directed edge count is odd; symmetric closure broken");
  if (g.node_attrs.size() != g.num_nodes * g.node_slots()) {
    fail("node attribute array has " + std::to_string(g.node_attrs.size()) +
         " entries, expected " + std::to_string(g.num_nodes * g.node_slots()));
  }
  if (g.edge_attrs.size() != g.edge_src.size() * g.edge_slots()) {
    fail("edge attribute array has " + std::to_string(g.edge_attrs.size()) +
         " entries, expected " + std::to_string(g.edge_src.size() * g.edge_slots()));
  }
  for (size_t e = 0; e < g.edge_src.size(); ++e) {
    if (g.edge_src[e] >= g.num_nodes || g.edge_dst[e] >= g.num_nodes) {
      fail("edge " + std::to_string(e) + " endpoint out of range");
    }
    if (g.edge_src[e] == g.edge_dst[e]) fail("self-loop at node " + std::to_string(g.edge_src[e]));
  }
  for (size_t i = 0; i < g.edge_src.size(); i += 2) {
    if (g.edge_src[i] != g.edge_dst[i + 1] || g.edge_dst[i] != g.edge_src[i + 1]) {
      fail("directed edges " + std::to_string(i) + "," + std::to_string(i + 1) +
           " are not mutual orientations");
    }
    for (size_t s = 0; s < g.edge_slots(); ++s) {
      if (g.edge_attr(i, s) != g.edge_attr(i + 1, s)) {
        fail("edge " + std::to_string(i / 2) + " has asymmetric attributes in slot " +
             std::to_string(s));
      }
    }
  }
  for (uint32_t v = 0; v < g.num_nodes; ++v) {
    for (size_t s = 0; s < g.node_slots(); ++s) {
      const int32_t a = g.node_attr(v, s);
      if (a < 0 || a > g.node_vocab[s]) {  // == vocab is the mask index
        fail("node " + std::to_string(v) + " slot " + std::to_string(s) + " value " +
             std::to_string(a) + " outside vocabulary " + std::to_string(g.node_vocab[s]));
      }
    }
  }
  for (size_t e = 0; e < g.edge_src.size(); ++e) {
    for (size_t s = 0; s < g.edge_slots(); ++s) {
      const int32_t a = g.edge_attr(e, s);
      if (a < 0 || a > g.edge_vocab[s]) {
        fail("edge " + std::to_string(e) + " slot " + std::to_string(s) + " value " +
             std::to_string(a) + " outside vocabulary " + std::to_string(g.edge_vocab[s]));
      }
    }
  }
}

Graph mask_attributes(const Graph& g, double rate, MaskMode mode, Rng& rng) {
  if (rate < 0.0 || rate > 1.0) {
    throw std::invalid_argument("mask_attributes: rate " + std::to_string(rate) +
                                " outside [0, 1]");
  }
  Graph out = g;
  if (mode == MaskMode::node) {
    const uint32_t count = static_cast<uint32_t>(std::floor(rate * g.num_nodes));
    if (count == 0) return out;
    const auto picked = rng.sample_without_replacement(g.num_nodes, count);
    for (uint32_t v : picked) {
      for (size_t s = 0; s < g.node_slots(); ++s) {
        out.node_attrs[v * g.node_slots() + s] = g.node_vocab[s];
      }
    }
  } else {
    const uint32_t undirected = static_cast<uint32_t>(g.num_undirected_edges());
    const uint32_t count = static_cast<uint32_t>(std::floor(rate * undirected));
    if (count == 0) return out;
    const auto picked = rng.sample_without_replacement(undirected, count);
    for (uint32_t e : picked) {
      for (size_t dir = 0; dir < 2; ++dir) {
        const size_t de = 2 * static_cast<size_t>(e) + dir;
        for (size_t s = 0; s < g.edge_slots(); ++s) {
          out.edge_attrs[de * g.edge_slots() + s] = g.edge_vocab[s];
        }
      }
    }
  }
  return out;
}

std::pair<Graph, Graph> make_correlated_pair(const Graph& g, double mask_rate,
                                             MaskMode mode, Rng& rng) {
  return {g, mask_attributes(g, mask_rate, mode, rng)};
}

namespace {

GraphBatch batch_impl(const std::vector<const Graph*>& graphs) {
  if (graphs.empty()) throw std::invalid_argument("batch: empty graph sequence");
  GraphBatch b;
  b.num_graphs = static_cast<uint32_t>(graphs.size());
  b.node_vocab = graphs[0]->node_vocab;
  b.edge_vocab = graphs[0]->edge_vocab;
  b.graph_offsets.push_back(0);
  for (const Graph* g : graphs) {
    if (g->node_vocab != b.node_vocab || g->edge_vocab != b.edge_vocab) {
      throw DataError("batch: graphs declare different attribute vocabularies");
    }
    const uint32_t base = b.total_nodes;
    b.total_nodes += g->num_nodes;
    b.graph_offsets.push_back(b.total_nodes);
    const uint32_t gi = static_cast<uint32_t>(b.labels.size());
    for (uint32_t v = 0; v < g->num_nodes; ++v) b.node_to_graph.push_back(gi);
    for (size_t e = 0; e < g->edge_src.size(); ++e) {
      b.edge_src.push_back(g->edge_src[e] + base);
      b.edge_dst.push_back(g->edge_dst[e] + base);
    }
    b.node_attrs.insert(b.node_attrs.end(), g->node_attrs.begin(), g->node_attrs.end());
    b.edge_attrs.insert(b.edge_attrs.end(), g->edge_attrs.begin(), g->edge_attrs.end());
    b.labels.push_back(g->label);
    b.splits.push_back(g->split);
  }
  return b;
}

}  // namespace

GraphBatch make_batch(const std::vector<const Graph*>& graphs) { return batch_impl(graphs); }

GraphBatch make_batch(const std::vector<Graph>& graphs) {
  std::vector<const Graph*> ptrs;
  ptrs.reserve(graphs.size());
  for (const auto& g : graphs) ptrs.push_back(&g);
  return batch_impl(ptrs);
}

std::vector<Graph> unbatch(const GraphBatch& b) {
  std::vector<Graph> out(b.num_graphs);
  const size_t ns = b.node_slots(), es = b.edge_slots();
  for (uint32_t gi = 0; gi < b.num_graphs; ++gi) {
    Graph& g = out[gi];
    const uint32_t lo = b.graph_offsets[gi], hi = b.graph_offsets[gi + 1];
    g.num_nodes = hi - lo;
    g.node_vocab = b.node_vocab;
    g.edge_vocab = b.edge_vocab;
    g.node_attrs.assign(b.node_attrs.begin() + lo * ns, b.node_attrs.begin() + hi * ns);
    g.label = b.labels[gi];
    g.split = b.splits[gi];
  }
  for (size_t e = 0; e < b.edge_src.size(); ++e) {
    const uint32_t gi = b.node_to_graph[b.edge_src[e]];
    Graph& g = out[gi];
    const uint32_t base = b.graph_offsets[gi];
    g.edge_src.push_back(b.edge_src[e] - base);
    g.edge_dst.push_back(b.edge_dst[e] - base);
    g.edge_attrs.insert(g.edge_attrs.end(), b.edge_attrs.begin() + e * es,
                        b.edge_attrs.begin() + (e + 1) * es);
  }
  return out;
}

}  // namespace graphlog
