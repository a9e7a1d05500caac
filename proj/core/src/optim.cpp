// SPDX-License-Identifier: Apache-2.0
#include "graphlog/optim.hpp"

#include <cmath>
#include <stdexcept>

#include "graphlog/errors.hpp"

namespace graphlog {

Adam::Adam(std::vector<TensorPtr> params, AdamConfig cfg, bool strict_numerics)
    : params_(std::move(params)), cfg_(cfg), strict_(strict_numerics) {
  for (const auto& p : params_) {
    if (!p->requires_grad()) {
      throw std::invalid_argument("Adam: parameter without gradient buffer");
    }
    m_.emplace_back(p->size(), 0.0);
    v_.emplace_back(p->size(), 0.0);
  }
}

void Adam::zero_grad() {
  for (auto& p : params_) p->zero_grad();
}

void Adam::step() {
  ++t_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (size_t i = 0; i < params_.size(); ++i) {
    Tensor& p = *params_[i];
    for (size_t j = 0; j < p.size(); ++j) {
      const double g = p.grad(j);
      if (strict_ && !std::isfinite(g)) {
        throw NumericError("adam_step: non-finite gradient in parameter #" + std::to_string(i) +
                           " element " + std::to_string(j));
      }
      m_[i][j] = cfg_.beta1 * m_[i][j] + (1.0 - cfg_.beta1) * g;
      v_[i][j] = cfg_.beta2 * v_[i][j] + (1.0 - cfg_.beta2) * g * g;
      const double mhat = m_[i][j] / bc1;
      const double vhat = v_[i][j] / bc2;
      p.set_value(j, p.value(j) - cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps));
    }
  }
}

void Adam::load_state(uint64_t step_count, std::vector<std::vector<double>> m,
                      std::vector<std::vector<double>> v) {
  if (m.size() != params_.size() || v.size() != params_.size()) {
    throw std::invalid_argument("Adam::load_state: parameter count mismatch");
  }
  for (size_t i = 0; i < params_.size(); ++i) {
    if (m[i].size() != params_[i]->size() || v[i].size() != params_[i]->size()) {
      throw std::invalid_argument("Adam::load_state: buffer shape mismatch at parameter #" +
                                  std::to_string(i));
    }
  }
  t_ = step_count;
  m_ = std::move(m);
  v_ = std::move(v);
}

double lr_schedule(uint32_t epoch, double base_lr, bool decay) {
  if (!decay) return base_lr;
  return base_lr * std::pow(0.3, static_cast<double>(epoch / 30));
}

}  // namespace graphlog
