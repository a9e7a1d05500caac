// SPDX-License-Identifier: Apache-2.0
#include "graphlog/data_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "graphlog/errors.hpp"

namespace graphlog {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

unsigned worker_threads() {
  if (const char* env = std::getenv("GRAPHLOG_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v >= 1) return static_cast<unsigned>(v);
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

std::vector<size_t> Dataset::split_indices(Split s) const {
  std::vector<size_t> out;
  for (size_t i = 0; i < graphs.size(); ++i) {
    if (graphs[i].split == s) out.push_back(i);
  }
  return out;
}

std::vector<int32_t> Dataset::leaf_labels() const {
  if (manifest.label_levels.empty()) {
    throw DataError("dataset has no hierarchy labels (manifest.label_levels is empty)");
  }
  std::vector<int32_t> out;
  out.reserve(graphs.size());
  for (const auto& g : graphs) {
    if (g.label.empty()) throw DataError("graph without label in a labeled dataset");
    out.push_back(g.label.back());
  }
  return out;
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

ordered_json graph_to_json(const Graph& g) {
  ordered_json j;
  j["n"] = g.num_nodes;
  ordered_json edges = ordered_json::array();
  ordered_json edge_attrs = ordered_json::array();
  for (size_t e = 0; e < g.edge_src.size(); e += 2) {  // undirected listed once
    edges.push_back({g.edge_src[e], g.edge_dst[e]});
    ordered_json attrs = ordered_json::array();
    for (size_t s = 0; s < g.edge_slots(); ++s) attrs.push_back(g.edge_attr(e, s));
    edge_attrs.push_back(std::move(attrs));
  }
  j["edges"] = std::move(edges);
  ordered_json node_attrs = ordered_json::array();
  for (uint32_t v = 0; v < g.num_nodes; ++v) {
    ordered_json attrs = ordered_json::array();
    for (size_t s = 0; s < g.node_slots(); ++s) attrs.push_back(g.node_attr(v, s));
    node_attrs.push_back(std::move(attrs));
  }
  j["node_attrs"] = std::move(node_attrs);
  j["edge_attrs"] = std::move(edge_attrs);
  if (g.label.empty()) {
    j["label"] = nullptr;
  } else {
    j["label"] = g.label;
  }
  j["split"] = split_name(g.split);
  return j;
}

Graph graph_from_json(const ordered_json& j, const DatasetManifest& m) {
  Graph g;
  g.node_vocab = m.node_vocab;
  g.edge_vocab = m.edge_vocab;
  g.num_nodes = j.at("n").get<uint32_t>();
  const auto& node_attrs = j.at("node_attrs");
  if (node_attrs.size() != g.num_nodes) {
    throw DataError("node_attrs has " + std::to_string(node_attrs.size()) +
                    " rows, expected " + std::to_string(g.num_nodes));
  }
  for (const auto& row : node_attrs) {
    if (row.size() != m.node_vocab.size()) {
      throw DataError("node attribute row has " + std::to_string(row.size()) +
                      " slots, manifest declares " + std::to_string(m.node_vocab.size()));
    }
    for (const auto& v : row) g.node_attrs.push_back(v.get<int32_t>());
  }
  const auto& edges = j.at("edges");
  const auto& edge_attrs = j.at("edge_attrs");
  if (edges.size() != edge_attrs.size()) {
    throw DataError("edges and edge_attrs disagree in length");
  }
  for (size_t e = 0; e < edges.size(); ++e) {
    const auto& pair = edges[e];
    if (pair.size() != 2) throw DataError("edge " + std::to_string(e) + " is not a pair");
    std::vector<int32_t> attrs;
    if (edge_attrs[e].size() != m.edge_vocab.size()) {
      throw DataError("edge " + std::to_string(e) + " has " +
                      std::to_string(edge_attrs[e].size()) + " attribute slots, manifest declares " +
                      std::to_string(m.edge_vocab.size()));
    }
    for (const auto& v : edge_attrs[e]) attrs.push_back(v.get<int32_t>());
    g.add_undirected_edge(pair[0].get<uint32_t>(), pair[1].get<uint32_t>(), attrs);
  }
  if (!j.at("label").is_null()) {
    for (const auto& v : j.at("label")) g.label.push_back(v.get<int32_t>());
  }
  g.split = split_from_name(j.at("split").get<std::string>());
  return g;
}

}  // namespace

void save_dataset(const Dataset& ds, const std::string& dir) {
  fs::create_directories(dir);
  {
    ordered_json m;
    m["version"] = ds.manifest.version;
    m["node_vocab"] = ds.manifest.node_vocab;
    m["edge_vocab"] = ds.manifest.edge_vocab;
    m["num_graphs"] = ds.manifest.num_graphs;
    m["num_tasks"] = ds.manifest.num_tasks;
    m["label_levels"] = ds.manifest.label_levels;
    ordered_json splits;
    for (const auto& [k, v] : ds.manifest.split_counts) splits[k] = v;
    m["splits"] = std::move(splits);
    std::ofstream out(fs::path(dir) / "manifest.json");
    if (!out) throw DataError("cannot write manifest in '" + dir + "'");
    out << m.dump(2) << "\n";
  }
  {
    std::ofstream out(fs::path(dir) / "dataset.jsonl");
    if (!out) throw DataError("cannot write dataset in '" + dir + "'");
    for (const auto& g : ds.graphs) out << graph_to_json(g).dump() << "\n";
  }
}

Dataset load_dataset(const std::string& dir) {
  const fs::path manifest_path = fs::path(dir) / "manifest.json";
  const fs::path data_path = fs::path(dir) / "dataset.jsonl";
  if (!fs::exists(manifest_path)) {
    throw DataError("missing manifest: " + manifest_path.string());
  }
  if (!fs::exists(data_path)) throw DataError("missing dataset file: " + data_path.string());

  Dataset ds;
  {
    std::ifstream in(manifest_path);
    ordered_json m;
    try {
      in >> m;
    } catch (const std::exception& e) {
      throw DataError("manifest parse error: " + std::string(e.what()));
    }
    try {
      ds.manifest.version = m.at("version").get<uint32_t>();
      ds.manifest.node_vocab = m.at("node_vocab").get<std::vector<int32_t>>();
      ds.manifest.edge_vocab = m.at("edge_vocab").get<std::vector<int32_t>>();
      ds.manifest.num_graphs = m.at("num_graphs").get<uint32_t>();
      ds.manifest.num_tasks = m.at("num_tasks").get<uint32_t>();
      ds.manifest.label_levels = m.at("label_levels").get<std::vector<uint32_t>>();
      for (const auto& [k, v] : m.at("splits").items()) {
        ds.manifest.split_counts[k] = v.get<uint32_t>();
      }
    } catch (const std::exception& e) {
      throw DataError("manifest field error: " + std::string(e.what()));
    }
    if (ds.manifest.version != 1) {
      throw DataError("unsupported dataset version " + std::to_string(ds.manifest.version));
    }
  }

  std::vector<std::string> lines;
  {
    std::ifstream in(data_path);
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty()) lines.push_back(std::move(line));
    }
  }
  if (lines.empty()) throw DataError("empty dataset file: " + data_path.string());
  if (lines.size() != ds.manifest.num_graphs) {
    throw DataError("manifest declares " + std::to_string(ds.manifest.num_graphs) +
                    " graphs but file has " + std::to_string(lines.size()) + " lines");
  }

  ds.graphs.assign(lines.size(), Graph{});
  std::vector<std::string> errors(lines.size());
  const unsigned nthreads =
      std::min<unsigned>(worker_threads(), 1 + static_cast<unsigned>(lines.size() / 512));
  auto parse_range = [&](size_t lo, size_t hi) {
    for (size_t i = lo; i < hi; ++i) {
      try {
        ordered_json j = ordered_json::parse(lines[i]);
        ds.graphs[i] = graph_from_json(j, ds.manifest);
      } catch (const std::exception& e) {
        errors[i] = std::string("line ") + std::to_string(i + 1) + ": " + e.what();
      }
    }
  };
  if (nthreads <= 1) {
    parse_range(0, lines.size());
  } else {
    std::vector<std::thread> pool;
    const size_t chunk = (lines.size() + nthreads - 1) / nthreads;
    for (unsigned t = 0; t < nthreads; ++t) {
      const size_t lo = t * chunk;
      const size_t hi = std::min(lines.size(), lo + chunk);
      if (lo < hi) pool.emplace_back(parse_range, lo, hi);
    }
    for (auto& th : pool) th.join();
  }
  for (const auto& e : errors) {
    if (!e.empty()) throw DataError(e);
  }

  std::map<std::string, uint32_t> seen_splits;
  for (size_t i = 0; i < ds.graphs.size(); ++i) {
    validate_graph(ds.graphs[i], "graph " + std::to_string(i) +
                                     " (line " + std::to_string(i + 1) + ")");
    const auto& g = ds.graphs[i];
    if (ds.manifest.num_tasks > 0 && g.label.size() != ds.manifest.num_tasks) {
      throw DataError("graph " + std::to_string(i) + " has " + std::to_string(g.label.size()) +
                      " label entries, manifest declares " +
                      std::to_string(ds.manifest.num_tasks) + " tasks");
    }
    if (!ds.manifest.label_levels.empty()) {
      if (g.label.size() != ds.manifest.label_levels.size()) {
        throw DataError("graph " + std::to_string(i) + " label path length " +
                        std::to_string(g.label.size()) + " != declared levels " +
                        std::to_string(ds.manifest.label_levels.size()));
      }
      for (size_t l = 0; l < g.label.size(); ++l) {
        if (g.label[l] < 0 || static_cast<uint32_t>(g.label[l]) >= ds.manifest.label_levels[l]) {
          throw DataError("graph " + std::to_string(i) + " label level " + std::to_string(l) +
                          " value " + std::to_string(g.label[l]) + " outside class count " +
                          std::to_string(ds.manifest.label_levels[l]));
        }
      }
    }
    ++seen_splits[split_name(g.split)];
  }
  if (seen_splits != ds.manifest.split_counts) {
    throw DataError("split tags in file do not match manifest split counts");
  }
  return ds;
}

// ---------------------------------------------------------------------------
// Planted-hierarchy generator

namespace {

// Flat class index at each level for a leaf class; level 0 is the top.
std::vector<int32_t> ancestor_path(uint32_t leaf, const std::vector<uint32_t>& branching) {
  std::vector<int32_t> path(branching.size());
  uint32_t below = 1;
  for (uint32_t b : branching) below *= b;
  for (size_t l = 0; l < branching.size(); ++l) {
    below /= branching[l];
    path[l] = static_cast<int32_t>(leaf / below);
  }
  return path;
}

}  // namespace

Dataset generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  const Rng root(spec.seed);
  const uint32_t leaves = spec.num_leaf_classes();
  const size_t levels = spec.branching.size();

  // Attribute layout: one node slot per hierarchy level plus one free-texture
  // slot. The slot for level 0 draws from a small palette owned by the top
  // class; the slot for level l >= 1 draws from a palette that is the
  // parent's symbol pool minus one element, so siblings overlap in all but
  // one symbol and leaf identity also rides on motif topology.
  const int32_t palette_size = 3;   // symbols per class palette
  const int32_t palette_pool = 8;   // symbols shared by palettes at one level
  std::vector<int32_t> node_vocab(levels + 1, palette_pool);
  node_vocab[levels] = 6;  // free slot, uninformative
  const std::vector<int32_t> edge_vocab = {4};

  auto palette = [&](size_t level, const std::vector<int32_t>& path) {
    if (level == 0) {
      Rng r = root.fork("palette", 0, static_cast<uint64_t>(path[0]));
      return r.sample_without_replacement(static_cast<uint32_t>(palette_pool), palette_size);
    }
    // Pool of palette_size + 1 symbols owned by the ancestor at level - 1;
    // the class drops one pool element by its rank among siblings.
    Rng r = root.fork("palette_pool", level, static_cast<uint64_t>(path[level - 1]));
    auto pool = r.sample_without_replacement(static_cast<uint32_t>(palette_pool),
                                             palette_size + 1);
    const uint32_t branch = spec.branching[level];
    const uint32_t rank = static_cast<uint32_t>(path[level]) % branch;
    pool.erase(pool.begin() + (rank % pool.size()));
    return pool;
  };

  // Seed motifs, one per leaf class.
  std::vector<Graph> motifs(leaves);
  for (uint32_t leaf = 0; leaf < leaves; ++leaf) {
    Rng mr = root.fork("motif", leaf);
    const auto path = ancestor_path(leaf, spec.branching);
    Graph& m = motifs[leaf];
    m.node_vocab = node_vocab;
    m.edge_vocab = edge_vocab;
    m.num_nodes = spec.motif_nodes_min +
                  static_cast<uint32_t>(mr.below(spec.motif_nodes_max - spec.motif_nodes_min + 1));
    std::vector<std::vector<uint32_t>> level_palettes(levels);
    for (size_t l = 0; l < levels; ++l) level_palettes[l] = palette(l, path);
    for (uint32_t v = 0; v < m.num_nodes; ++v) {
      for (size_t l = 0; l < levels; ++l) {
        const auto& pal = level_palettes[l];
        m.node_attrs.push_back(static_cast<int32_t>(pal[mr.below(pal.size())]));
      }
      m.node_attrs.push_back(static_cast<int32_t>(mr.below(node_vocab[levels])));
    }
    // Random spanning tree keeps the motif connected; extra edges add texture.
    std::set<std::pair<uint32_t, uint32_t>> present;
    const int32_t motif_edge_attr = path[0] % edge_vocab[0];
    auto add_edge = [&](uint32_t u, uint32_t v, int32_t attr) {
      if (u == v) return false;
      auto key = std::minmax(u, v);
      if (!present.insert({key.first, key.second}).second) return false;
      m.add_undirected_edge(u, v, {attr});
      return true;
    };
    for (uint32_t v = 1; v < m.num_nodes; ++v) {
      add_edge(v, static_cast<uint32_t>(mr.below(v)), motif_edge_attr);
    }
    const uint32_t extra = m.num_nodes / 3;
    for (uint32_t e = 0; e < extra; ++e) {
      add_edge(static_cast<uint32_t>(mr.below(m.num_nodes)),
               static_cast<uint32_t>(mr.below(m.num_nodes)), motif_edge_attr);
    }
    m.label = path;
  }

  Dataset ds;
  ds.manifest.node_vocab = node_vocab;
  ds.manifest.edge_vocab = edge_vocab;
  ds.manifest.num_tasks = 0;
  uint32_t classes = 1;
  for (uint32_t b : spec.branching) {
    classes *= b;
    ds.manifest.label_levels.push_back(classes);
  }

  for (uint32_t leaf = 0; leaf < leaves; ++leaf) {
    for (uint32_t i = 0; i < spec.graphs_per_leaf; ++i) {
      Rng gr = root.fork("graph", leaf, i);
      Graph g = motifs[leaf];
      // Attribute flips.
      if (spec.attr_noise > 0.0) {
        for (uint32_t v = 0; v < g.num_nodes; ++v) {
          for (size_t s = 0; s < g.node_slots(); ++s) {
            if (gr.uniform() < spec.attr_noise) {
              g.node_attrs[v * g.node_slots() + s] =
                  static_cast<int32_t>(gr.below(static_cast<uint64_t>(g.node_vocab[s])));
            }
          }
        }
        for (size_t e = 0; e < g.edge_src.size(); e += 2) {
          for (size_t s = 0; s < g.edge_slots(); ++s) {
            if (gr.uniform() < spec.attr_noise) {
              const int32_t val = static_cast<int32_t>(gr.below(static_cast<uint64_t>(g.edge_vocab[s])));
              g.edge_attrs[e * g.edge_slots() + s] = val;
              g.edge_attrs[(e + 1) * g.edge_slots() + s] = val;
            }
          }
        }
      }
      // Noise edges.
      if (spec.edge_noise > 0.0) {
        std::set<std::pair<uint32_t, uint32_t>> present;
        for (size_t e = 0; e < g.edge_src.size(); e += 2) {
          auto key = std::minmax(g.edge_src[e], g.edge_dst[e]);
          present.insert({key.first, key.second});
        }
        const uint32_t extra = static_cast<uint32_t>(
            std::floor(spec.edge_noise * static_cast<double>(g.num_undirected_edges())));
        for (uint32_t e = 0; e < extra; ++e) {
          for (int attempt = 0; attempt < 16; ++attempt) {
            const uint32_t u = static_cast<uint32_t>(gr.below(g.num_nodes));
            const uint32_t v = static_cast<uint32_t>(gr.below(g.num_nodes));
            if (u == v) continue;
            auto key = std::minmax(u, v);
            if (!present.insert({key.first, key.second}).second) continue;
            g.add_undirected_edge(u, v, {static_cast<int32_t>(gr.below(static_cast<uint64_t>(edge_vocab[0])))});
            break;
          }
        }
      }
      // 8:1:1 split, round-robin within each class.
      const uint32_t slot = i % 10;
      g.split = slot < 8 ? Split::train : (slot == 8 ? Split::valid : Split::test);
      ds.graphs.push_back(std::move(g));
    }
  }
  ds.manifest.num_graphs = static_cast<uint32_t>(ds.graphs.size());
  for (const auto& g : ds.graphs) ++ds.manifest.split_counts[split_name(g.split)];
  return ds;
}

}  // namespace graphlog
