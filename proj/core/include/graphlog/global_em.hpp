// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <vector>

#include "graphlog/forest.hpp"
#include "graphlog/rng.hpp"
#include "graphlog/tensor.hpp"

namespace graphlog {

// Samples a connected top-down chain: the top layer index from a softmax
// categorical over cosine(prototype, h)/temperature across all top
// prototypes, each lower layer from the same form restricted to the children
// of the previously sampled prototype. No gradients flow through sampling.
LatentChain e_step_sample(const std::vector<double>& graph_embedding,
                          const PrototypeForest& forest, double temperature, Rng& rng);

// Negative energy f: sum of depth graph-to-prototype cosines plus depth-1
// consecutive prototype-to-prototype cosines. Differentiable in h and in
// every prototype on the chain. h_row is 1 x d.
TensorPtr energy(Tape& tape, const TensorPtr& h_row, const PrototypeForest& forest,
                 const LatentChain& chain);

// Energies of N (graph, chain) pairs at once -> N x 1.
TensorPtr batched_energy(Tape& tape, const TensorPtr& h, const PrototypeForest& forest,
                         const std::vector<std::vector<int64_t>>& idx_per_layer);

// NCE surrogate over unnormalized likelihoods log p~ = f:
//   -(1/N) sum_n [ f(h_n, z_n) - avg_k f(h_n, z_n with layer k substituted) ]
// with one uniformly drawn different same-layer prototype per substituted
// layer. Layers with a single prototype are skipped and the average
// renormalizes; if every layer has one prototype there is no negative and
// the call is an error. sum_negatives switches the inner average to a sum.
TensorPtr nce_global_loss(Tape& tape, const TensorPtr& h, const std::vector<LatentChain>& chains,
                          const PrototypeForest& forest, bool sum_negatives, Rng& rng);

// Unnormalized mini-batch log-likelihood sum_n f(h_n, z_n); diagnostic only,
// no gradients.
double monitored_mb_loglik(const std::vector<std::vector<double>>& h,
                           const std::vector<LatentChain>& chains,
                           const PrototypeForest& forest);

// Scalar energy of one (embedding, chain) pair without a tape.
double energy_value(const std::vector<double>& h, const PrototypeForest& forest,
                    const LatentChain& chain);

struct EmDiagnostics {
  std::vector<double> nce_loss;          // per step
  std::vector<double> mean_pos_energy;   // per step
  double running_qtilde_over_n = 0.0;    // running mean of Q~/N across steps
  std::vector<std::vector<uint64_t>> chain_usage;  // per layer, per prototype
  uint64_t steps = 0;
  uint64_t samples = 0;

  void record_step(double nce, double mean_energy, const std::vector<LatentChain>& chains,
                   const PrototypeForest& forest);
};

}  // namespace graphlog
