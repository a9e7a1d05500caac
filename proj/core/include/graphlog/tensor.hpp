// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <initializer_list>
#include <memory>
#include <string>
#include <vector>

namespace graphlog {

enum class DType : uint8_t { f64, f32 };

inline const char* dtype_name(DType dt) { return dt == DType::f64 ? "f64" : "f32"; }

class Tape;
class Tensor;
using TensorPtr = std::shared_ptr<Tensor>;

// Dense 2-D tensor (rows x cols), 64-bit values by default with 32-bit
// storage selectable per tensor. Scalars are 1x1, row vectors 1xn. A grad
// buffer of identical shape exists iff requires_grad.
class Tensor {
 public:
  static TensorPtr zeros(size_t rows, size_t cols, DType dt = DType::f64,
                         bool requires_grad = false);
  static TensorPtr scalar(double v, DType dt = DType::f64);
  static TensorPtr from_rows(std::initializer_list<std::initializer_list<double>> rows,
                             DType dt = DType::f64, bool requires_grad = false);
  static TensorPtr row(std::initializer_list<double> v, DType dt = DType::f64,
                       bool requires_grad = false);
  static TensorPtr from_flat(size_t rows, size_t cols, const std::vector<double>& v,
                             DType dt = DType::f64, bool requires_grad = false);

  size_t rows() const { return rows_; }
  size_t cols() const { return cols_; }
  size_t size() const { return rows_ * cols_; }
  DType dtype() const { return dtype_; }
  bool requires_grad() const { return requires_grad_; }
  std::string shape_str() const;

  // Detached deep copy: same shape, dtype, values and requires_grad; fresh
  // zeroed grad buffer, no tape membership.
  TensorPtr clone() const;

  double value(size_t i) const;
  double value(size_t r, size_t c) const { return value(r * cols_ + c); }
  void set_value(size_t i, double v);
  void set_value(size_t r, size_t c, double v) { set_value(r * cols_ + c, v); }
  // Value of a 1x1 tensor.
  double item() const;
  std::vector<double> to_doubles() const;
  void copy_row_to(size_t r, std::vector<double>& out) const;

  double grad(size_t i) const;
  double grad(size_t r, size_t c) const { return grad(r * cols_ + c); }
  std::vector<double> grad_to_doubles() const;
  void accumulate_grad(size_t i, double v);
  void zero_grad();
  double grad_abs_sum() const;

  bool finite() const;

  template <typename T> T* data();
  template <typename T> const T* data() const;
  template <typename T> T* gdata();

 private:
  friend class Tape;

  Tensor(size_t rows, size_t cols, DType dt, bool requires_grad);

  size_t rows_ = 0, cols_ = 0;
  DType dtype_ = DType::f64;
  bool requires_grad_ = false;
  std::vector<double> v64_, g64_;
  std::vector<float> v32_, g32_;

  // Producing tape, if any. Cleared tapes are detected by epoch mismatch.
  Tape* tape_ = nullptr;
  uint64_t tape_epoch_ = 0;
  int64_t node_ = -1;
};

// Records differentiable operations in execution order. Single-threaded;
// independent tapes may run on separate threads.
class Tape {
 public:
  explicit Tape(bool strict_numerics = false);
  ~Tape();
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Elementwise; b may also be a 1xC row broadcast over a's rows.
  TensorPtr add(const TensorPtr& a, const TensorPtr& b);
  TensorPtr subtract(const TensorPtr& a, const TensorPtr& b);
  TensorPtr scale(const TensorPtr& a, double s);
  TensorPtr hadamard(const TensorPtr& a, const TensorPtr& b);
  TensorPtr matmul(const TensorPtr& a, const TensorPtr& b);
  // out[i, :] = a[idx[i], :]
  TensorPtr row_gather(const TensorPtr& a, const std::vector<int64_t>& idx);
  // out[j, :] = sum of src rows i with idx[i] == j; out has out_rows rows.
  TensorPtr row_scatter_add(const TensorPtr& src, const std::vector<int64_t>& idx,
                            size_t out_rows);
  TensorPtr relu(const TensorPtr& a);
  // Column-wise mean / sum over rows -> 1xC.
  TensorPtr mean_rows(const TensorPtr& a);
  TensorPtr sum_rows(const TensorPtr& a);
  // out[r, :] = w[r] * a[r, :] with constant per-row weights.
  TensorPtr scale_rows(const TensorPtr& a, const std::vector<double>& w);
  // Per-row Euclidean norm -> Nx1.
  TensorPtr l2_norm_rows(const TensorPtr& a);
  // Per-row dot product -> Nx1.
  TensorPtr dot_rows(const TensorPtr& a, const TensorPtr& b);
  // Row-wise softmax.
  TensorPtr softmax(const TensorPtr& a);
  TensorPtr log(const TensorPtr& a);
  TensorPtr exp(const TensorPtr& a);
  TensorPtr concat_rows(const std::vector<TensorPtr>& parts);
  // Per-row cosine similarity -> Nx1, in [-1, 1]. Norms below eps_norm are
  // clamped; clamp events are counted in clamped_cosine_count().
  TensorPtr cosine_rows(const TensorPtr& a, const TensorPtr& b);
  // Cosine similarity of two equal-length vectors (1xN or Nx1) -> 1x1.
  TensorPtr cosine_similarity(const TensorPtr& x, const TensorPtr& y);

  // Accumulates d(loss)/d(leaf) into every requires_grad leaf reachable from
  // the scalar loss, then clears the tape. A loss not produced by this tape
  // is treated as a detached constant: grads stay untouched.
  void backward(const TensorPtr& loss);
  void clear();

  size_t node_count() const { return nodes_.size(); }
  // True if any node recorded before the watermark reads `leaf` as an input.
  bool uses_before(const TensorPtr& leaf, size_t watermark) const;

  bool strict() const { return strict_; }
  uint64_t clamped_cosine_count() const { return clamped_cosines_; }

  static constexpr double kEpsNorm = 1e-12;

 private:
  struct Node {
    TensorPtr out;
    std::vector<TensorPtr> inputs;
    std::function<void()> back;
  };

  void record(TensorPtr out, std::vector<TensorPtr> inputs, std::function<void()> back);
  void check_finite(const TensorPtr& t, const char* op) const;

  std::vector<Node> nodes_;
  bool strict_ = false;
  uint64_t epoch_ = 1;
  uint64_t clamped_cosines_ = 0;
};

}  // namespace graphlog
