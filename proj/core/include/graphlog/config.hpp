// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "graphlog/graph.hpp"
#include "graphlog/tensor.hpp"

namespace graphlog {

struct GnnConfig {
  uint32_t layers = 3;      // desk default; paper preset uses 5
  uint32_t hidden_dim = 64; // paper preset uses 300
};

struct FinetuneConfig {
  uint32_t batch_size = 32;
  uint32_t epochs = 100;
  double lr = 1e-3;
  bool scheduler = true;    // lr * 0.3 every 30 epochs
};

// Every hyperparameter of a run plus every gap-filling decision. Serialized
// verbatim into each checkpoint and next to every output.
struct TrainConfig {
  std::string preset = "desk";          // desk | paper
  uint64_t seed = 7;
  DType dtype = DType::f64;
  bool strict_numerics = false;

  double mask_rate = 0.3;
  MaskMode mask_mode = MaskMode::node;
  uint32_t batch_size = 64;             // paper preset: 512
  uint32_t epochs_local = 1;
  uint32_t epochs_joint = 10;
  double lr = 1e-3;
  uint32_t k_neg = 1;                   // negatives per positive in the local losses
  uint32_t nodes_per_graph = 8;         // node positives sampled per graph

  uint32_t forest_depth = 3;            // Lp
  std::vector<uint32_t> k_per_layer = {4, 8, 16};  // top -> bottom; paper preset: 50 each
  double temperature = 1.0;             // E-step softmax temperature
  bool nce_sum_negatives = false;       // false: average the Lp negative terms
  bool e_step_on_masked = false;        // false: E-step reads the unmasked graph embedding

  bool loss_graph = true;
  bool loss_sub = true;
  bool loss_global = true;

  GnnConfig gnn;
  FinetuneConfig finetune;

  void validate() const;  // throws UsageError
};

struct SyntheticSpec {
  uint32_t levels = 2;
  std::vector<uint32_t> branching = {4, 2};  // top -> bottom
  uint32_t graphs_per_leaf = 100;
  uint32_t motif_nodes_min = 6;
  uint32_t motif_nodes_max = 10;
  double edge_noise = 0.1;
  double attr_noise = 0.1;
  uint64_t seed = 7;

  uint32_t num_leaf_classes() const;
  void validate() const;
};

// The full provenance record of a run.
struct RunConfig {
  TrainConfig train;
  SyntheticSpec synthetic;

  // Canonical key=value text with [train]/[gnn]/[forest]/[finetune]/[synthetic]
  // sections. Round-trips through parse_config.
  std::string to_ini() const;
  uint64_t hash() const;
  std::string hash_hex() const;
};

// Parses the documented INI schema. Unknown sections or keys are rejected.
// A `preset = paper|desk` key inside [train] is applied before the remaining
// keys so individual values can still be overridden.
RunConfig parse_config(const std::string& ini_text);
RunConfig load_config_file(const std::string& path);
void apply_preset(TrainConfig& cfg, const std::string& preset);

// Single "key=value" override, e.g. "train.epochs_joint=3".
void apply_override(RunConfig& cfg, const std::string& assignment);

}  // namespace graphlog
