// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "graphlog/rng.hpp"

namespace graphlog {

enum class MaskMode : uint8_t { node, edge };
enum class Split : uint8_t { train, valid, test, none };

const char* split_name(Split s);
Split split_from_name(const std::string& s);

// Undirected attributed graph. Edges are stored as symmetric directed pairs
// with both orientations adjacent: directed edges 2i and 2i+1 are the two
// orientations of undirected edge i, with identical attributes. Attribute
// slot values are categorical in [0, vocab); the reserved mask index equals
// the vocabulary size itself.
struct Graph {
  uint32_t num_nodes = 0;
  std::vector<uint32_t> edge_src;     // directed
  std::vector<uint32_t> edge_dst;
  std::vector<int32_t> node_attrs;    // num_nodes * node_slots(), row-major
  std::vector<int32_t> edge_attrs;    // edge_src.size() * edge_slots()
  std::vector<int32_t> node_vocab;    // per-slot vocabulary sizes
  std::vector<int32_t> edge_vocab;
  std::vector<int32_t> label;         // task vector or hierarchy path; empty if unlabeled
  Split split = Split::none;

  size_t node_slots() const { return node_vocab.size(); }
  size_t edge_slots() const { return edge_vocab.size(); }
  size_t num_undirected_edges() const { return edge_src.size() / 2; }

  void add_undirected_edge(uint32_t u, uint32_t v, const std::vector<int32_t>& attrs);
  int32_t node_attr(uint32_t node, size_t slot) const {
    return node_attrs[node * node_slots() + slot];
  }
  int32_t edge_attr(size_t directed_edge, size_t slot) const {
    return edge_attrs[directed_edge * edge_slots() + slot];
  }
};

// Throws DataError if any structural or vocabulary invariant is violated.
// `name` is prepended to messages (e.g. "graph 17").
void validate_graph(const Graph& g, const std::string& name);

// Copy of g with floor(rate * count) uniformly chosen nodes (or undirected
// edges) having every attribute slot replaced by the reserved mask index.
// Topology is unchanged.
Graph mask_attributes(const Graph& g, double rate, MaskMode mode, Rng& rng);

// (g, g') where g' is the masked counterpart; node indexing is shared.
std::pair<Graph, Graph> make_correlated_pair(const Graph& g, double mask_rate,
                                             MaskMode mode, Rng& rng);

// Disjoint union of N graphs with reindexed edges.
struct GraphBatch {
  uint32_t num_graphs = 0;
  uint32_t total_nodes = 0;
  std::vector<uint32_t> graph_offsets;   // size num_graphs+1, strictly increasing
  std::vector<uint32_t> node_to_graph;   // size total_nodes
  std::vector<uint32_t> edge_src;        // batch-level node indices
  std::vector<uint32_t> edge_dst;
  std::vector<int32_t> node_attrs;
  std::vector<int32_t> edge_attrs;
  std::vector<int32_t> node_vocab;
  std::vector<int32_t> edge_vocab;
  std::vector<std::vector<int32_t>> labels;
  std::vector<Split> splits;

  size_t node_slots() const { return node_vocab.size(); }
  size_t edge_slots() const { return edge_vocab.size(); }
  uint32_t graph_of(uint32_t node) const { return node_to_graph[node]; }
  uint32_t nodes_in_graph(uint32_t g) const {
    return graph_offsets[g + 1] - graph_offsets[g];
  }
};

GraphBatch make_batch(const std::vector<Graph>& graphs);
GraphBatch make_batch(const std::vector<const Graph*>& graphs);
std::vector<Graph> unbatch(const GraphBatch& b);

}  // namespace graphlog
