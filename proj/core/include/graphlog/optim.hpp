// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <vector>

#include "graphlog/tensor.hpp"

namespace graphlog {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Bias-corrected Adam. Moment buffers are kept in 64-bit regardless of the
// parameter dtype; the update is computed in doubles and written back in the
// parameter's precision.
class Adam {
 public:
  Adam(std::vector<TensorPtr> params, AdamConfig cfg, bool strict_numerics = false);

  // One update from the gradients currently held by the parameters.
  void step();
  void zero_grad();
  void set_lr(double lr) { cfg_.lr = lr; }
  double lr() const { return cfg_.lr; }
  uint64_t step_count() const { return t_; }

  const std::vector<TensorPtr>& params() const { return params_; }
  const std::vector<std::vector<double>>& moment1() const { return m_; }
  const std::vector<std::vector<double>>& moment2() const { return v_; }
  void load_state(uint64_t step_count, std::vector<std::vector<double>> m,
                  std::vector<std::vector<double>> v);

 private:
  std::vector<TensorPtr> params_;
  AdamConfig cfg_;
  bool strict_ = false;
  uint64_t t_ = 0;
  std::vector<std::vector<double>> m_, v_;
};

// Step-decay schedule: base_lr * 0.3^floor(epoch/30) when decay is on
// (fine-tuning), constant base_lr otherwise (pre-training).
double lr_schedule(uint32_t epoch, double base_lr, bool decay);

}  // namespace graphlog
