// SPDX-License-Identifier: Apache-2.0
#include "graphlog/forest.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "graphlog/errors.hpp"

namespace graphlog {

double cosine_sim(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) {
    throw std::invalid_argument("cosine_sim: length mismatch " + std::to_string(a.size()) +
                                " vs " + std::to_string(b.size()));
  }
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  na = std::max(std::sqrt(na), Tape::kEpsNorm);
  nb = std::max(std::sqrt(nb), Tape::kEpsNorm);
  return std::clamp(dot / (na * nb), -1.0, 1.0);
}

namespace {

double sq_dist(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

// Nearest center by squared distance; ties break toward the lowest index.
uint32_t nearest(const std::vector<double>& p, const std::vector<std::vector<double>>& centers) {
  uint32_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (uint32_t c = 0; c < centers.size(); ++c) {
    const double d = sq_dist(p, centers[c]);
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  return best;
}

}  // namespace

namespace {

struct LloydRun {
  std::vector<std::vector<double>> centers;
  std::vector<uint32_t> assign;
  double sse = 0.0;
};

LloydRun lloyd_once(const std::vector<std::vector<double>>& points, uint32_t k_eff, Rng& rng,
                    uint32_t iters) {
  const size_t m = points.size();
  // k-means++ seeding.
  std::vector<std::vector<double>> centers;
  centers.reserve(k_eff);
  centers.push_back(points[rng.below(m)]);
  std::vector<double> d2(m);
  while (centers.size() < k_eff) {
    double total = 0.0;
    for (size_t i = 0; i < m; ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& c : centers) best = std::min(best, sq_dist(points[i], c));
      d2[i] = best;
      total += best;
    }
    size_t chosen = 0;
    if (total > 0.0) {
      const double target = rng.uniform() * total;
      double acc = 0.0;
      chosen = m - 1;
      for (size_t i = 0; i < m; ++i) {
        acc += d2[i];
        if (acc >= target) {
          chosen = i;
          break;
        }
      }
    } else {
      // All remaining points coincide with a chosen center.
      chosen = centers.size() % m;
    }
    centers.push_back(points[chosen]);
  }

  // Lloyd iterations; an empty cluster keeps its previous center.
  std::vector<uint32_t> assign(m, 0);
  for (size_t i = 0; i < m; ++i) assign[i] = nearest(points[i], centers);
  const size_t dim = points[0].size();
  for (uint32_t it = 0; it < iters; ++it) {
    std::vector<std::vector<double>> sums(centers.size(), std::vector<double>(dim, 0.0));
    std::vector<uint32_t> counts(centers.size(), 0);
    for (size_t i = 0; i < m; ++i) {
      ++counts[assign[i]];
      for (size_t c = 0; c < dim; ++c) sums[assign[i]][c] += points[i][c];
    }
    for (size_t j = 0; j < centers.size(); ++j) {
      if (counts[j] == 0) continue;
      for (size_t c = 0; c < dim; ++c) centers[j][c] = sums[j][c] / counts[j];
    }
    bool changed = false;
    for (size_t i = 0; i < m; ++i) {
      const uint32_t a = nearest(points[i], centers);
      if (a != assign[i]) {
        assign[i] = a;
        changed = true;
      }
    }
    if (!changed) break;
  }
  LloydRun run;
  run.centers = std::move(centers);
  run.assign = std::move(assign);
  for (size_t i = 0; i < m; ++i) run.sse += sq_dist(points[i], run.centers[run.assign[i]]);
  return run;
}

}  // namespace

KMeansResult kmeans(const std::vector<std::vector<double>>& points, uint32_t k, Rng& rng,
                    uint32_t iters) {
  const size_t m = points.size();
  if (m < 2) throw std::invalid_argument("kmeans: need at least 2 points, got " + std::to_string(m));
  if (k == 0) throw std::invalid_argument("kmeans: k must be positive");
  const uint32_t k_eff = std::min<uint32_t>(k, static_cast<uint32_t>(m));

  // Lloyd is a local method; restarts with fresh seedings keep the lowest-SSE
  // run, all drawn from the one generator.
  constexpr uint32_t kRestarts = 8;
  LloydRun best = lloyd_once(points, k_eff, rng, iters);
  for (uint32_t r = 1; r < kRestarts; ++r) {
    LloydRun run = lloyd_once(points, k_eff, rng, iters);
    if (run.sse < best.sse) best = std::move(run);
  }
  std::vector<std::vector<double>>& centers = best.centers;
  std::vector<uint32_t>& assign = best.assign;

  // Discard centers with < 2 assigned points; reassign their points to the
  // nearest surviving center.
  std::vector<uint32_t> counts(centers.size(), 0);
  for (uint32_t a : assign) ++counts[a];
  std::vector<uint32_t> keep;
  for (uint32_t j = 0; j < centers.size(); ++j) {
    if (counts[j] >= 2) keep.push_back(j);
  }
  if (keep.empty()) {
    // Every cluster is a singleton; retain the first center so the result
    // stays usable, all points reassigned to it.
    keep.push_back(0);
  }
  KMeansResult res;
  for (uint32_t j : keep) res.centers.push_back(centers[j]);
  std::vector<int64_t> remap(centers.size(), -1);
  for (uint32_t njj = 0; njj < keep.size(); ++njj) remap[keep[njj]] = njj;
  res.assignment.resize(m);
  for (size_t i = 0; i < m; ++i) {
    if (remap[assign[i]] >= 0) {
      res.assignment[i] = static_cast<uint32_t>(remap[assign[i]]);
    } else {
      res.assignment[i] = nearest(points[i], res.centers);
    }
  }
  for (size_t i = 0; i < m; ++i) res.sse += sq_dist(points[i], res.centers[res.assignment[i]]);
  return res;
}

std::vector<double> PrototypeForest::prototype(size_t layer, size_t i) const {
  std::vector<double> out;
  layers[layer]->copy_row_to(i, out);
  return out;
}

void PrototypeForest::validate() const {
  if (depth == 0 || layers.size() != depth) {
    throw std::logic_error("forest: layer count does not match depth");
  }
  if (parent.size() != depth || children.size() != depth) {
    throw std::logic_error("forest: parent/children arrays sized wrong");
  }
  for (size_t l = 0; l < depth; ++l) {
    if (layer_size(l) == 0) throw std::logic_error("forest: empty layer " + std::to_string(l));
  }
  for (size_t l = 1; l < depth; ++l) {
    if (parent[l].size() != layer_size(l)) {
      throw std::logic_error("forest: parent list size mismatch at layer " + std::to_string(l));
    }
    for (uint32_t i = 0; i < layer_size(l); ++i) {
      const uint32_t p = parent[l][i];
      if (p >= layer_size(l - 1)) throw std::logic_error("forest: parent index out of range");
      const auto& kids = children[l - 1][p];
      if (std::find(kids.begin(), kids.end(), i) == kids.end()) {
        throw std::logic_error("forest: child missing from parent's list");
      }
    }
  }
  for (size_t l = 0; l + 1 < depth; ++l) {
    if (children[l].size() != layer_size(l)) {
      throw std::logic_error("forest: children list size mismatch at layer " + std::to_string(l));
    }
    size_t covered = 0;
    for (uint32_t i = 0; i < layer_size(l); ++i) {
      if (children[l][i].empty()) {
        throw std::logic_error("forest: internal prototype " + std::to_string(i) + " at layer " +
                               std::to_string(l) + " has no children");
      }
      covered += children[l][i].size();
      for (uint32_t c : children[l][i]) {
        if (c >= layer_size(l + 1) || parent[l + 1][c] != i) {
          throw std::logic_error("forest: parent/children inconsistency");
        }
      }
    }
    if (covered != layer_size(l + 1)) {
      throw std::logic_error("forest: children lists do not partition layer " +
                             std::to_string(l + 1));
    }
  }
}

PrototypeForest init_forest(const std::vector<std::vector<double>>& graph_embeddings,
                            const TrainConfig& cfg, Rng& rng) {
  if (graph_embeddings.size() < 2) {
    throw DataError("init_forest: need at least 2 graph embeddings, got " +
                    std::to_string(graph_embeddings.size()));
  }
  const uint32_t depth = cfg.forest_depth;
  // Built bottom-up: k_per_layer is listed top -> bottom.
  std::vector<std::vector<std::vector<double>>> centers_per_layer(depth);
  std::vector<std::vector<uint32_t>> assign_per_layer(depth);
  const std::vector<std::vector<double>>* pts = &graph_embeddings;
  for (int64_t l = static_cast<int64_t>(depth) - 1; l >= 0; --l) {
    if (pts->size() < 2) {
      throw DataError("init_forest: layer " + std::to_string(l + 1) +
                      " collapsed below 2 prototypes; dataset too degenerate to cluster");
    }
    Rng layer_rng = rng.fork("kmeans_layer", static_cast<uint64_t>(l));
    KMeansResult km = kmeans(*pts, cfg.k_per_layer[static_cast<size_t>(l)], layer_rng);
    centers_per_layer[static_cast<size_t>(l)] = km.centers;
    assign_per_layer[static_cast<size_t>(l)] = km.assignment;
    pts = &centers_per_layer[static_cast<size_t>(l)];
  }

  PrototypeForest f;
  f.depth = depth;
  f.layers.resize(depth);
  f.parent.resize(depth);
  f.children.resize(depth);
  const size_t dim = graph_embeddings[0].size();
  for (size_t l = 0; l < depth; ++l) {
    const auto& centers = centers_per_layer[l];
    auto t = Tensor::zeros(centers.size(), dim, cfg.dtype, true);
    for (size_t i = 0; i < centers.size(); ++i) {
      for (size_t c = 0; c < dim; ++c) t->set_value(i, c, centers[i][c]);
    }
    f.layers[l] = t;
  }
  for (size_t l = 1; l < depth; ++l) {
    // assignment at layer l-1 clusters the centers of layer l.
    f.parent[l] = assign_per_layer[l - 1];
  }
  for (size_t l = 0; l + 1 < depth; ++l) {
    f.children[l].assign(f.layer_size(l), {});
    for (uint32_t i = 0; i < f.layer_size(l + 1); ++i) {
      f.children[l][f.parent[l + 1][i]].push_back(i);
    }
  }
  f.bottom_assignment = assign_per_layer[depth - 1];
  f.validate();
  return f;
}

std::vector<int32_t> nearest_bottom_prototypes(const std::vector<std::vector<double>>& embeddings,
                                               const PrototypeForest& forest) {
  const size_t bottom = forest.depth - 1;
  std::vector<std::vector<double>> protos(forest.layer_size(bottom));
  for (size_t i = 0; i < protos.size(); ++i) protos[i] = forest.prototype(bottom, i);
  std::vector<int32_t> out(embeddings.size());
  for (size_t g = 0; g < embeddings.size(); ++g) {
    int32_t best = 0;
    double best_s = -2.0;
    for (size_t i = 0; i < protos.size(); ++i) {
      const double s = cosine_sim(embeddings[g], protos[i]);
      if (s > best_s) {
        best_s = s;
        best = static_cast<int32_t>(i);
      }
    }
    out[g] = best;
  }
  return out;
}

std::vector<std::vector<double>> chain_vectors(const PrototypeForest& forest,
                                               const LatentChain& chain) {
  if (chain.indices.size() != forest.depth) {
    throw std::invalid_argument("chain_vectors: chain length " +
                                std::to_string(chain.indices.size()) + " != forest depth " +
                                std::to_string(forest.depth));
  }
  for (size_t l = 0; l < forest.depth; ++l) {
    if (chain.indices[l] >= forest.layer_size(l)) {
      throw std::invalid_argument("chain_vectors: index out of range at layer " +
                                  std::to_string(l));
    }
    if (l > 0 && forest.parent[l][chain.indices[l]] != chain.indices[l - 1]) {
      throw std::invalid_argument("chain_vectors: broken chain at layer " + std::to_string(l) +
                                  " (prototype " + std::to_string(chain.indices[l]) +
                                  " is not a child of " + std::to_string(chain.indices[l - 1]) + ")");
    }
  }
  std::vector<std::vector<double>> out(forest.depth);
  for (size_t l = 0; l < forest.depth; ++l) out[l] = forest.prototype(l, chain.indices[l]);
  return out;
}

}  // namespace graphlog
