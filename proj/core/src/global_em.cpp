// SPDX-License-Identifier: Apache-2.0
#include "graphlog/global_em.hpp"

#include <cmath>
#include <stdexcept>

namespace graphlog {

namespace {

// Softmax over sims/temperature, sampled by inverse CDF.
size_t sample_categorical(const std::vector<double>& sims, double temperature, Rng& rng,
                          double* log_prob) {
  double mx = sims[0];
  for (double s : sims) mx = std::max(mx, s);
  std::vector<double> p(sims.size());
  double total = 0.0;
  for (size_t i = 0; i < sims.size(); ++i) {
    p[i] = std::exp((sims[i] - mx) / temperature);
    total += p[i];
  }
  const double u = rng.uniform() * total;
  double acc = 0.0;
  size_t chosen = sims.size() - 1;
  for (size_t i = 0; i < sims.size(); ++i) {
    acc += p[i];
    if (acc >= u) {
      chosen = i;
      break;
    }
  }
  *log_prob += std::log(p[chosen] / total);
  return chosen;
}

}  // namespace

LatentChain e_step_sample(const std::vector<double>& graph_embedding,
                          const PrototypeForest& forest, double temperature, Rng& rng) {
  if (temperature <= 0.0) {
    throw std::invalid_argument("e_step_sample: temperature must be positive");
  }
  for (double v : graph_embedding) {
    if (!std::isfinite(v)) throw std::invalid_argument("e_step_sample: non-finite embedding");
  }
  LatentChain chain;
  std::vector<double> sims(forest.layer_size(0));
  for (uint32_t i = 0; i < forest.layer_size(0); ++i) {
    sims[i] = cosine_sim(forest.prototype(0, i), graph_embedding);
  }
  uint32_t current = static_cast<uint32_t>(
      sample_categorical(sims, temperature, rng, &chain.log_prob));
  chain.indices.push_back(current);
  for (size_t l = 1; l < forest.depth; ++l) {
    const auto& kids = forest.children[l - 1][current];
    if (kids.empty()) {
      // Impossible for a valid forest; the invariant is checked at init.
      throw std::logic_error("e_step_sample: internal prototype with no children");
    }
    sims.resize(kids.size());
    for (size_t i = 0; i < kids.size(); ++i) {
      sims[i] = cosine_sim(forest.prototype(l, kids[i]), graph_embedding);
    }
    const size_t pick = sample_categorical(sims, temperature, rng, &chain.log_prob);
    current = kids[pick];
    chain.indices.push_back(current);
  }
  return chain;
}

TensorPtr batched_energy(Tape& tape, const TensorPtr& h, const PrototypeForest& forest,
                         const std::vector<std::vector<int64_t>>& idx_per_layer) {
  if (idx_per_layer.size() != forest.depth) {
    throw std::invalid_argument("batched_energy: index rows != forest depth");
  }
  std::vector<TensorPtr> gathered(forest.depth);
  for (size_t l = 0; l < forest.depth; ++l) {
    gathered[l] = tape.row_gather(forest.layers[l], idx_per_layer[l]);
  }
  TensorPtr total;
  for (size_t l = 0; l < forest.depth; ++l) {
    auto term = tape.cosine_rows(h, gathered[l]);
    total = total ? tape.add(total, term) : term;
  }
  for (size_t l = 0; l + 1 < forest.depth; ++l) {
    auto term = tape.cosine_rows(gathered[l], gathered[l + 1]);
    total = tape.add(total, term);
  }
  return total;
}

TensorPtr energy(Tape& tape, const TensorPtr& h_row, const PrototypeForest& forest,
                 const LatentChain& chain) {
  if (chain.indices.size() != forest.depth) {
    throw std::invalid_argument("energy: chain has " + std::to_string(chain.indices.size()) +
                                " layers, forest depth is " + std::to_string(forest.depth));
  }
  std::vector<std::vector<int64_t>> idx(forest.depth, std::vector<int64_t>(1));
  for (size_t l = 0; l < forest.depth; ++l) idx[l][0] = chain.indices[l];
  return batched_energy(tape, h_row, forest, idx);
}

TensorPtr nce_global_loss(Tape& tape, const TensorPtr& h, const std::vector<LatentChain>& chains,
                          const PrototypeForest& forest, bool sum_negatives, Rng& rng) {
  const size_t n = h->rows();
  if (chains.size() != n) {
    throw std::invalid_argument("nce_global_loss: " + std::to_string(chains.size()) +
                                " chains for " + std::to_string(n) + " graphs");
  }
  std::vector<std::vector<int64_t>> pos_idx(forest.depth, std::vector<int64_t>(n));
  for (size_t i = 0; i < n; ++i) {
    for (size_t l = 0; l < forest.depth; ++l) {
      if (chains[i].indices[l] >= forest.layer_size(l)) {
        throw std::invalid_argument("nce_global_loss: chain index out of range");
      }
      pos_idx[l][i] = chains[i].indices[l];
    }
  }
  std::vector<size_t> substitutable;
  for (size_t l = 0; l < forest.depth; ++l) {
    if (forest.layer_size(l) >= 2) substitutable.push_back(l);
  }
  if (substitutable.empty()) {
    throw std::invalid_argument(
        "nce_global_loss: every layer has a single prototype; no negative is constructible");
  }

  auto pos = batched_energy(tape, h, forest, pos_idx);

  TensorPtr neg_sum;
  for (size_t l : substitutable) {
    auto idx = pos_idx;
    const uint64_t m = forest.layer_size(l);
    for (size_t i = 0; i < n; ++i) {
      idx[l][i] = static_cast<int64_t>(
          rng.below_excluding(m, static_cast<uint64_t>(pos_idx[l][i])));
    }
    auto neg = batched_energy(tape, h, forest, idx);
    neg_sum = neg_sum ? tape.add(neg_sum, neg) : neg;
  }
  TensorPtr neg_term = sum_negatives
                           ? neg_sum
                           : tape.scale(neg_sum, 1.0 / static_cast<double>(substitutable.size()));
  auto per_graph = tape.subtract(pos, neg_term);
  return tape.scale(tape.mean_rows(per_graph), -1.0);
}

double energy_value(const std::vector<double>& h, const PrototypeForest& forest,
                    const LatentChain& chain) {
  double f = 0.0;
  for (size_t l = 0; l < forest.depth; ++l) {
    f += cosine_sim(h, forest.prototype(l, chain.indices[l]));
  }
  for (size_t l = 0; l + 1 < forest.depth; ++l) {
    f += cosine_sim(forest.prototype(l, chain.indices[l]),
                    forest.prototype(l + 1, chain.indices[l + 1]));
  }
  return f;
}

double monitored_mb_loglik(const std::vector<std::vector<double>>& h,
                           const std::vector<LatentChain>& chains,
                           const PrototypeForest& forest) {
  if (h.size() != chains.size()) {
    throw std::invalid_argument("monitored_mb_loglik: embeddings/chains size mismatch");
  }
  double total = 0.0;
  for (size_t i = 0; i < h.size(); ++i) total += energy_value(h[i], forest, chains[i]);
  return total;
}

void EmDiagnostics::record_step(double nce, double mean_energy,
                                const std::vector<LatentChain>& chains,
                                const PrototypeForest& forest) {
  if (chain_usage.empty()) {
    chain_usage.resize(forest.depth);
    for (size_t l = 0; l < forest.depth; ++l) chain_usage[l].assign(forest.layer_size(l), 0);
  }
  nce_loss.push_back(nce);
  mean_pos_energy.push_back(mean_energy);
  for (const auto& c : chains) {
    for (size_t l = 0; l < forest.depth; ++l) ++chain_usage[l][c.indices[l]];
  }
  samples += chains.size();
  ++steps;
  running_qtilde_over_n += (mean_energy - running_qtilde_over_n) / static_cast<double>(steps);
}

}  // namespace graphlog
