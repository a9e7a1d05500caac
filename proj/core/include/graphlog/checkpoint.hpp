// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "graphlog/config.hpp"
#include "graphlog/forest.hpp"
#include "graphlog/gin.hpp"

namespace graphlog {

struct LinearHead {
  TensorPtr w;  // d x T
  TensorPtr b;  // 1 x T
};

// Complete run state: resolved config, encoder, optional classifier head,
// optional prototype forest, optional optimizer state, trainer progress.
// The on-disk form is the little-endian "GLOG" binary documented in
// docs/formats.md; parameter arrays are always stored as 64-bit floats.
struct Checkpoint {
  RunConfig config;
  GinParams gin;
  std::optional<LinearHead> head;
  std::optional<PrototypeForest> forest;

  bool has_optim = false;
  uint64_t adam_step = 0;
  std::vector<std::vector<double>> adam_m;
  std::vector<std::vector<double>> adam_v;

  // Completed-progress counters for exact resume.
  uint32_t phase = 0;          // 0: in local phase, 1: forest built, in joint phase, 2: finished
  uint32_t epoch = 0;          // next epoch index within the current phase
  uint32_t step_in_epoch = 0;  // next step index within the current epoch
  uint64_t global_step = 0;    // completed optimizer steps
};

void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace graphlog
