// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <vector>

#include "graphlog/config.hpp"
#include "graphlog/rng.hpp"
#include "graphlog/tensor.hpp"

namespace graphlog {

// Cosine similarity of two plain vectors, denominators clamped at eps_norm,
// result clamped to [-1, 1]. Scalar counterpart of Tape::cosine_rows.
double cosine_sim(const std::vector<double>& a, const std::vector<double>& b);

struct KMeansResult {
  std::vector<std::vector<double>> centers;  // k' x d after pruning
  std::vector<uint32_t> assignment;          // point -> surviving center
  double sse = 0.0;                          // sum of squared distances to assigned centers
};

// Lloyd iterations from k-means++ seeding, then centers with fewer than two
// assigned points are discarded and their points reassigned to the nearest
// surviving center. Deterministic given the generator.
KMeansResult kmeans(const std::vector<std::vector<double>>& points, uint32_t k, Rng& rng,
                    uint32_t iters = 50);

// One sampled latent variable: a connected top-to-bottom path of prototype
// indices (global index within each layer) plus its sampling log-probability.
struct LatentChain {
  std::vector<uint32_t> indices;
  double log_prob = 0.0;
};

// Hierarchical prototypes: layered trees of trainable embedding vectors.
// Layer 0 is the top (coarsest); layer depth-1 is the bottom. Topology is
// frozen after initialization; only the vectors train.
struct PrototypeForest {
  uint32_t depth = 0;
  std::vector<TensorPtr> layers;                       // layers[l]: M_l x d parameters
  std::vector<std::vector<uint32_t>> parent;           // parent[l][i], defined for l >= 1
  std::vector<std::vector<std::vector<uint32_t>>> children;  // children[l][i] -> layer l+1 indices
  std::vector<uint32_t> bottom_assignment;             // init-time point -> bottom prototype

  uint32_t layer_size(size_t l) const { return static_cast<uint32_t>(layers[l]->rows()); }
  size_t dim() const { return layers.empty() ? 0 : layers[0]->cols(); }
  std::vector<TensorPtr> parameters() const { return layers; }
  std::vector<double> prototype(size_t layer, size_t i) const;

  // Throws if parent/children are inconsistent, an internal node is
  // childless, or any layer is empty.
  void validate() const;
};

// Bottom layer from K-means over graph embeddings, upper layers from
// iterated K-means over the centers of the layer below; parent links are the
// assignment maps. cfg.k_per_layer is listed top -> bottom.
PrototypeForest init_forest(const std::vector<std::vector<double>>& graph_embeddings,
                            const TrainConfig& cfg, Rng& rng);

// The depth prototype vectors addressed by the chain, top-down. Throws if
// the chain breaks a parent link.
std::vector<std::vector<double>> chain_vectors(const PrototypeForest& forest,
                                               const LatentChain& chain);

// Cosine-nearest bottom-layer prototype per embedding; ties break toward the
// lower index.
std::vector<int32_t> nearest_bottom_prototypes(const std::vector<std::vector<double>>& embeddings,
                                               const PrototypeForest& forest);

}  // namespace graphlog
