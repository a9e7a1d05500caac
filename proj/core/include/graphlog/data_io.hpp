// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "graphlog/config.hpp"
#include "graphlog/graph.hpp"

namespace graphlog {

// Sibling header file of a dataset; validates the graph file against the
// declared vocabularies and split tags.
struct DatasetManifest {
  uint32_t version = 1;
  std::vector<int32_t> node_vocab;
  std::vector<int32_t> edge_vocab;
  uint32_t num_graphs = 0;
  // > 0 when labels are per-task binary vectors (entries -1 mean missing).
  uint32_t num_tasks = 0;
  // Class counts per hierarchy level when labels are ancestor paths.
  std::vector<uint32_t> label_levels;
  std::map<std::string, uint32_t> split_counts;
};

struct Dataset {
  DatasetManifest manifest;
  std::vector<Graph> graphs;

  std::vector<size_t> split_indices(Split s) const;
  // Leaf-class label (last ancestor-path entry) per graph; requires label_levels.
  std::vector<int32_t> leaf_labels() const;
};

// Writes <dir>/manifest.json and <dir>/dataset.jsonl (one graph per line,
// undirected edges listed once). Byte-deterministic for a given dataset.
void save_dataset(const Dataset& ds, const std::string& dir);

// Loads and fully validates a dataset directory. Malformed lines and
// vocabulary violations raise DataError naming the line/graph/slot/value.
// Line parsing is spread over worker threads (see worker_threads()).
Dataset load_dataset(const std::string& dir);

// Planted-hierarchy generator: every leaf class is a distinct connected seed
// motif whose node attributes are drawn from per-level palettes shared along
// the class's ancestor path; each graph is the class motif plus noise edges
// and attribute flips. Labels record the full ancestor path.
Dataset generate_synthetic(const SyntheticSpec& spec);

// Thread cap: GRAPHLOG_THREADS if set (>= 1), else hardware concurrency.
unsigned worker_threads();

}  // namespace graphlog
