// SPDX-License-Identifier: Apache-2.0
#include "graphlog/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "graphlog/errors.hpp"

namespace graphlog {

namespace {

std::string shape_of(size_t r, size_t c) {
  return std::to_string(r) + "x" + std::to_string(c);
}

[[noreturn]] void shape_error(const char* op, const Tensor& a, const Tensor& b) {
  throw std::invalid_argument(std::string(op) + ": shape mismatch (" + a.shape_str() +
                              " vs " + b.shape_str() + ")");
}

void check_same_dtype(const char* op, const Tensor& a, const Tensor& b) {
  if (a.dtype() != b.dtype()) {
    throw std::invalid_argument(std::string(op) + ": dtype mismatch (" +
                                dtype_name(a.dtype()) + " vs " + dtype_name(b.dtype()) + ")");
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Tensor

Tensor::Tensor(size_t rows, size_t cols, DType dt, bool requires_grad)
    : rows_(rows), cols_(cols), dtype_(dt), requires_grad_(requires_grad) {
  if (rows == 0 || cols == 0) {
    throw std::invalid_argument("Tensor: zero dimension in shape " + shape_of(rows, cols));
  }
  const size_t n = rows * cols;
  if (dt == DType::f64) {
    v64_.assign(n, 0.0);
    if (requires_grad) g64_.assign(n, 0.0);
  } else {
    v32_.assign(n, 0.0f);
    if (requires_grad) g32_.assign(n, 0.0f);
  }
}

TensorPtr Tensor::zeros(size_t rows, size_t cols, DType dt, bool requires_grad) {
  return TensorPtr(new Tensor(rows, cols, dt, requires_grad));
}

TensorPtr Tensor::scalar(double v, DType dt) {
  auto t = zeros(1, 1, dt, false);
  t->set_value(0, v);
  return t;
}

TensorPtr Tensor::from_rows(std::initializer_list<std::initializer_list<double>> rows,
                            DType dt, bool requires_grad) {
  const size_t r = rows.size();
  const size_t c = rows.begin()->size();
  auto t = zeros(r, c, dt, requires_grad);
  size_t i = 0;
  for (const auto& row : rows) {
    if (row.size() != c) throw std::invalid_argument("from_rows: ragged rows");
    for (double v : row) t->set_value(i++, v);
  }
  return t;
}

TensorPtr Tensor::row(std::initializer_list<double> v, DType dt, bool requires_grad) {
  auto t = zeros(1, v.size(), dt, requires_grad);
  size_t i = 0;
  for (double x : v) t->set_value(i++, x);
  return t;
}

TensorPtr Tensor::from_flat(size_t rows, size_t cols, const std::vector<double>& v,
                            DType dt, bool requires_grad) {
  auto t = zeros(rows, cols, dt, requires_grad);
  if (v.size() != rows * cols) throw std::invalid_argument("from_flat: length mismatch");
  for (size_t i = 0; i < v.size(); ++i) t->set_value(i, v[i]);
  return t;
}

std::string Tensor::shape_str() const { return shape_of(rows_, cols_); }

TensorPtr Tensor::clone() const {
  auto t = zeros(rows_, cols_, dtype_, requires_grad_);
  t->v64_ = v64_;
  t->v32_ = v32_;
  return t;
}

double Tensor::value(size_t i) const {
  return dtype_ == DType::f64 ? v64_[i] : static_cast<double>(v32_[i]);
}

void Tensor::set_value(size_t i, double v) {
  if (dtype_ == DType::f64) {
    v64_[i] = v;
  } else {
    v32_[i] = static_cast<float>(v);
  }
}

double Tensor::item() const {
  if (size() != 1) {
    throw std::invalid_argument("item: tensor is " + shape_str() + ", expected 1x1");
  }
  return value(0);
}

std::vector<double> Tensor::to_doubles() const {
  std::vector<double> out(size());
  for (size_t i = 0; i < out.size(); ++i) out[i] = value(i);
  return out;
}

void Tensor::copy_row_to(size_t r, std::vector<double>& out) const {
  out.resize(cols_);
  for (size_t c = 0; c < cols_; ++c) out[c] = value(r, c);
}

double Tensor::grad(size_t i) const {
  if (!requires_grad_) throw std::logic_error("grad: tensor does not require grad");
  return dtype_ == DType::f64 ? g64_[i] : static_cast<double>(g32_[i]);
}

std::vector<double> Tensor::grad_to_doubles() const {
  std::vector<double> out(size());
  for (size_t i = 0; i < out.size(); ++i) out[i] = grad(i);
  return out;
}

void Tensor::accumulate_grad(size_t i, double v) {
  if (!requires_grad_) return;
  if (dtype_ == DType::f64) {
    g64_[i] += v;
  } else {
    g32_[i] += static_cast<float>(v);
  }
}

void Tensor::zero_grad() {
  std::fill(g64_.begin(), g64_.end(), 0.0);
  std::fill(g32_.begin(), g32_.end(), 0.0f);
}

double Tensor::grad_abs_sum() const {
  double s = 0.0;
  for (size_t i = 0; i < size(); ++i) s += std::abs(grad(i));
  return s;
}

bool Tensor::finite() const {
  for (size_t i = 0; i < size(); ++i) {
    if (!std::isfinite(value(i))) return false;
  }
  return true;
}

template <> double* Tensor::data<double>() {
  if (dtype_ != DType::f64) throw std::logic_error("data<double> on f32 tensor");
  return v64_.data();
}
template <> const double* Tensor::data<double>() const {
  if (dtype_ != DType::f64) throw std::logic_error("data<double> on f32 tensor");
  return v64_.data();
}
template <> float* Tensor::data<float>() {
  if (dtype_ != DType::f32) throw std::logic_error("data<float> on f64 tensor");
  return v32_.data();
}
template <> const float* Tensor::data<float>() const {
  if (dtype_ != DType::f32) throw std::logic_error("data<float> on f64 tensor");
  return v32_.data();
}
template <> double* Tensor::gdata<double>() { return g64_.data(); }
template <> float* Tensor::gdata<float>() { return g32_.data(); }

// ---------------------------------------------------------------------------
// Tape

Tape::Tape(bool strict_numerics) : strict_(strict_numerics) {}

Tape::~Tape() = default;

void Tape::record(TensorPtr out, std::vector<TensorPtr> inputs, std::function<void()> back) {
  out->requires_grad_ = true;
  if (out->dtype() == DType::f64) {
    out->g64_.assign(out->size(), 0.0);
  } else {
    out->g32_.assign(out->size(), 0.0f);
  }
  out->tape_ = this;
  out->tape_epoch_ = epoch_;
  out->node_ = static_cast<int64_t>(nodes_.size());
  nodes_.push_back(Node{std::move(out), std::move(inputs), std::move(back)});
}

void Tape::check_finite(const TensorPtr& t, const char* op) const {
  if (strict_ && !t->finite()) {
    throw NumericError(std::string(op) + ": non-finite input");
  }
}

void Tape::clear() {
  nodes_.clear();
  ++epoch_;
}

void Tape::backward(const TensorPtr& loss) {
  if (loss->size() != 1) {
    throw std::invalid_argument("backward: loss must be scalar, got " + loss->shape_str());
  }
  if (loss->tape_ == nullptr) {
    // Detached constant: nothing reachable, grads stay as they are.
    clear();
    return;
  }
  if (loss->tape_ != this || loss->tape_epoch_ != epoch_) {
    throw std::invalid_argument("backward: loss was produced by another or a cleared tape");
  }
  // Intermediate grads are scratch per backward pass; leaves accumulate.
  for (auto& n : nodes_) n.out->zero_grad();
  loss->accumulate_grad(0, 1.0);
  for (int64_t i = loss->node_; i >= 0; --i) {
    nodes_[static_cast<size_t>(i)].back();
  }
  clear();
}

bool Tape::uses_before(const TensorPtr& leaf, size_t watermark) const {
  const size_t n = std::min(watermark, nodes_.size());
  for (size_t i = 0; i < n; ++i) {
    for (const auto& in : nodes_[i].inputs) {
      if (in.get() == leaf.get()) return true;
    }
  }
  return false;
}

// ---------------------------------------------------------------------------
// Kernels. Each op validates shapes, computes the forward value, and when any
// input requires grad records a closure implementing the chain rule.

namespace {

template <typename T>
const T* vals(const TensorPtr& t) {
  return t->data<T>();
}
template <typename T>
T* vals_mut(const TensorPtr& t) {
  return t->data<T>();
}
template <typename T>
T* grads(const TensorPtr& t) {
  return t->gdata<T>();
}

template <typename F>
void dispatch(DType dt, F&& f) {
  if (dt == DType::f64) {
    f(double{});
  } else {
    f(float{});
  }
}

}  // namespace

TensorPtr Tape::add(const TensorPtr& a, const TensorPtr& b) {
  check_same_dtype("add", *a, *b);
  check_finite(a, "add");
  check_finite(b, "add");
  const bool broadcast = (b->rows() == 1 && a->cols() == b->cols() && a->rows() != 1);
  if (!broadcast && (a->rows() != b->rows() || a->cols() != b->cols())) {
    shape_error("add", *a, *b);
  }
  auto out = Tensor::zeros(a->rows(), a->cols(), a->dtype());
  dispatch(a->dtype(), [&](auto tag) {
    using T = decltype(tag);
    const T* pa = vals<T>(a);
    const T* pb = vals<T>(b);
    T* po = vals_mut<T>(out);
    const size_t rows = a->rows(), cols = a->cols();
    for (size_t r = 0; r < rows; ++r) {
      for (size_t c = 0; c < cols; ++c) {
        po[r * cols + c] = pa[r * cols + c] + pb[broadcast ? c : r * cols + c];
      }
    }
  });
  if (a->requires_grad() || b->requires_grad()) {
    record(out, {a, b}, [a, b, out, broadcast]() {
      dispatch(a->dtype(), [&](auto tag) {
        using T = decltype(tag);
        const T* go = grads<T>(out);
        const size_t rows = a->rows(), cols = a->cols();
        if (a->requires_grad()) {
          T* ga = grads<T>(a);
          for (size_t i = 0; i < rows * cols; ++i) ga[i] += go[i];
        }
        if (b->requires_grad()) {
          T* gb = grads<T>(b);
          for (size_t r = 0; r < rows; ++r) {
            for (size_t c = 0; c < cols; ++c) {
              gb[broadcast ? c : r * cols + c] += go[r * cols + c];
            }
          }
        }
      });
    });
  }
  return out;
}

TensorPtr Tape::subtract(const TensorPtr& a, const TensorPtr& b) {
  check_same_dtype("subtract", *a, *b);
  check_finite(a, "subtract");
  check_finite(b, "subtract");
  if (a->rows() != b->rows() || a->cols() != b->cols()) shape_error("subtract", *a, *b);
  auto out = Tensor::zeros(a->rows(), a->cols(), a->dtype());
  dispatch(a->dtype(), [&](auto tag) {
    using T = decltype(tag);
    const T* pa = vals<T>(a);
    const T* pb = vals<T>(b);
    T* po = vals_mut<T>(out);
    for (size_t i = 0; i < a->size(); ++i) po[i] = pa[i] - pb[i];
  });
  if (a->requires_grad() || b->requires_grad()) {
    record(out, {a, b}, [a, b, out]() {
      dispatch(a->dtype(), [&](auto tag) {
        using T = decltype(tag);
        const T* go = grads<T>(out);
        if (a->requires_grad()) {
          T* ga = grads<T>(a);
          for (size_t i = 0; i < a->size(); ++i) ga[i] += go[i];
        }
        if (b->requires_grad()) {
          T* gb = grads<T>(b);
          for (size_t i = 0; i < b->size(); ++i) gb[i] -= go[i];
        }
      });
    });
  }
  return out;
}

TensorPtr Tape::scale(const TensorPtr& a, double s) {
  check_finite(a, "scale");
  auto out = Tensor::zeros(a->rows(), a->cols(), a->dtype());
  dispatch(a->dtype(), [&](auto tag) {
    using T = decltype(tag);
    const T* pa = vals<T>(a);
    T* po = vals_mut<T>(out);
    const T ts = static_cast<T>(s);
    for (size_t i = 0; i < a->size(); ++i) po[i] = pa[i] * ts;
  });
  if (a->requires_grad()) {
    record(out, {a}, [a, out, s]() {
      dispatch(a->dtype(), [&](auto tag) {
        using T = decltype(tag);
        const T* go = grads<T>(out);
        T* ga = grads<T>(a);
        const T ts = static_cast<T>(s);
        for (size_t i = 0; i < a->size(); ++i) ga[i] += go[i] * ts;
      });
    });
  }
  return out;
}

TensorPtr Tape::hadamard(const TensorPtr& a, const TensorPtr& b) {
  check_same_dtype("hadamard", *a, *b);
  check_finite(a, "hadamard");
  check_finite(b, "hadamard");
  if (a->rows() != b->rows() || a->cols() != b->cols()) shape_error("hadamard", *a, *b);
  auto out = Tensor::zeros(a->rows(), a->cols(), a->dtype());
  dispatch(a->dtype(), [&](auto tag) {
    using T = decltype(tag);
    const T* pa = vals<T>(a);
    const T* pb = vals<T>(b);
    T* po = vals_mut<T>(out);
    for (size_t i = 0; i < a->size(); ++i) po[i] = pa[i] * pb[i];
  });
  if (a->requires_grad() || b->requires_grad()) {
    record(out, {a, b}, [a, b, out]() {
      dispatch(a->dtype(), [&](auto tag) {
        using T = decltype(tag);
        const T* go = grads<T>(out);
        const T* pa = vals<T>(a);
        const T* pb = vals<T>(b);
        if (a->requires_grad()) {
          T* ga = grads<T>(a);
          for (size_t i = 0; i < a->size(); ++i) ga[i] += go[i] * pb[i];
        }
        if (b->requires_grad()) {
          T* gb = grads<T>(b);
          for (size_t i = 0; i < b->size(); ++i) gb[i] += go[i] * pa[i];
        }
      });
    });
  }
  return out;
}

TensorPtr Tape::matmul(const TensorPtr& a, const TensorPtr& b) {
  check_same_dtype("matmul", *a, *b);
  check_finite(a, "matmul");
  check_finite(b, "matmul");
  if (a->cols() != b->rows()) shape_error("matmul", *a, *b);
  const size_t m = a->rows(), k = a->cols(), n = b->cols();
  auto out = Tensor::zeros(m, n, a->dtype());
  dispatch(a->dtype(), [&](auto tag) {
    using T = decltype(tag);
    const T* pa = vals<T>(a);
    const T* pb = vals<T>(b);
    T* po = vals_mut<T>(out);
    for (size_t i = 0; i < m; ++i) {
      for (size_t p = 0; p < k; ++p) {
        const T av = pa[i * k + p];
        if (av == T(0)) continue;
        const T* brow = pb + p * n;
        T* orow = po + i * n;
        for (size_t j = 0; j < n; ++j) orow[j] += av * brow[j];
      }
    }
  });
  if (a->requires_grad() || b->requires_grad()) {
    record(out, {a, b}, [a, b, out, m, k, n]() {
      dispatch(a->dtype(), [&](auto tag) {
        using T = decltype(tag);
        const T* go = grads<T>(out);
        const T* pa = vals<T>(a);
        const T* pb = vals<T>(b);
        if (a->requires_grad()) {
          // dA = dOut * B^T
          T* ga = grads<T>(a);
          for (size_t i = 0; i < m; ++i) {
            for (size_t p = 0; p < k; ++p) {
              T acc = T(0);
              const T* grow = go + i * n;
              const T* brow = pb + p * n;
              for (size_t j = 0; j < n; ++j) acc += grow[j] * brow[j];
              ga[i * k + p] += acc;
            }
          }
        }
        if (b->requires_grad()) {
          // dB = A^T * dOut
          T* gb = grads<T>(b);
          for (size_t i = 0; i < m; ++i) {
            const T* grow = go + i * n;
            for (size_t p = 0; p < k; ++p) {
              const T av = pa[i * k + p];
              if (av == T(0)) continue;
              T* brow = gb + p * n;
              for (size_t j = 0; j < n; ++j) brow[j] += av * grow[j];
            }
          }
        }
      });
    });
  }
  return out;
}

TensorPtr Tape::row_gather(const TensorPtr& a, const std::vector<int64_t>& idx) {
  check_finite(a, "row_gather");
  if (idx.empty()) throw std::invalid_argument("row_gather: empty index list");
  for (int64_t i : idx) {
    if (i < 0 || static_cast<size_t>(i) >= a->rows()) {
      throw std::invalid_argument("row_gather: index " + std::to_string(i) +
                                  " out of range for " + a->shape_str());
    }
  }
  const size_t cols = a->cols();
  auto out = Tensor::zeros(idx.size(), cols, a->dtype());
  dispatch(a->dtype(), [&](auto tag) {
    using T = decltype(tag);
    const T* pa = vals<T>(a);
    T* po = vals_mut<T>(out);
    for (size_t i = 0; i < idx.size(); ++i) {
      const T* src = pa + static_cast<size_t>(idx[i]) * cols;
      std::copy(src, src + cols, po + i * cols);
    }
  });
  if (a->requires_grad()) {
    record(out, {a}, [a, out, idx]() {
      dispatch(a->dtype(), [&](auto tag) {
        using T = decltype(tag);
        const T* go = grads<T>(out);
        T* ga = grads<T>(a);
        const size_t cols = a->cols();
        for (size_t i = 0; i < idx.size(); ++i) {
          T* dst = ga + static_cast<size_t>(idx[i]) * cols;
          const T* src = go + i * cols;
          for (size_t c = 0; c < cols; ++c) dst[c] += src[c];
        }
      });
    });
  }
  return out;
}

TensorPtr Tape::row_scatter_add(const TensorPtr& src, const std::vector<int64_t>& idx,
                                size_t out_rows) {
  check_finite(src, "row_scatter_add");
  if (idx.size() != src->rows()) {
    throw std::invalid_argument("row_scatter_add: index count " + std::to_string(idx.size()) +
                                " != source rows " + std::to_string(src->rows()));
  }
  for (int64_t i : idx) {
    if (i < 0 || static_cast<size_t>(i) >= out_rows) {
      throw std::invalid_argument("row_scatter_add: index " + std::to_string(i) +
                                  " out of range for " + std::to_string(out_rows) + " rows");
    }
  }
  const size_t cols = src->cols();
  auto out = Tensor::zeros(out_rows, cols, src->dtype());
  dispatch(src->dtype(), [&](auto tag) {
    using T = decltype(tag);
    const T* ps = vals<T>(src);
    T* po = vals_mut<T>(out);
    for (size_t i = 0; i < idx.size(); ++i) {
      T* dst = po + static_cast<size_t>(idx[i]) * cols;
      const T* row = ps + i * cols;
      for (size_t c = 0; c < cols; ++c) dst[c] += row[c];
    }
  });
  if (src->requires_grad()) {
    record(out, {src}, [src, out, idx]() {
      dispatch(src->dtype(), [&](auto tag) {
        using T = decltype(tag);
        const T* go = grads<T>(out);
        T* gs = grads<T>(src);
        const size_t cols = src->cols();
        for (size_t i = 0; i < idx.size(); ++i) {
          const T* row = go + static_cast<size_t>(idx[i]) * cols;
          T* dst = gs + i * cols;
          for (size_t c = 0; c < cols; ++c) dst[c] += row[c];
        }
      });
    });
  }
  return out;
}

TensorPtr Tape::relu(const TensorPtr& a) {
  check_finite(a, "relu");
  auto out = Tensor::zeros(a->rows(), a->cols(), a->dtype());
  dispatch(a->dtype(), [&](auto tag) {
    using T = decltype(tag);
    const T* pa = vals<T>(a);
    T* po = vals_mut<T>(out);
    for (size_t i = 0; i < a->size(); ++i) po[i] = pa[i] > T(0) ? pa[i] : T(0);
  });
  if (a->requires_grad()) {
    record(out, {a}, [a, out]() {
      dispatch(a->dtype(), [&](auto tag) {
        using T = decltype(tag);
        const T* go = grads<T>(out);
        const T* pa = vals<T>(a);
        T* ga = grads<T>(a);
        for (size_t i = 0; i < a->size(); ++i) {
          if (pa[i] > T(0)) ga[i] += go[i];
        }
      });
    });
  }
  return out;
}

TensorPtr Tape::mean_rows(const TensorPtr& a) {
  check_finite(a, "mean_rows");
  const size_t rows = a->rows(), cols = a->cols();
  auto out = Tensor::zeros(1, cols, a->dtype());
  dispatch(a->dtype(), [&](auto tag) {
    using T = decltype(tag);
    const T* pa = vals<T>(a);
    T* po = vals_mut<T>(out);
    for (size_t r = 0; r < rows; ++r) {
      for (size_t c = 0; c < cols; ++c) po[c] += pa[r * cols + c];
    }
    const T inv = T(1) / static_cast<T>(rows);
    for (size_t c = 0; c < cols; ++c) po[c] *= inv;
  });
  if (a->requires_grad()) {
    record(out, {a}, [a, out, rows, cols]() {
      dispatch(a->dtype(), [&](auto tag) {
        using T = decltype(tag);
        const T* go = grads<T>(out);
        T* ga = grads<T>(a);
        const T inv = T(1) / static_cast<T>(rows);
        for (size_t r = 0; r < rows; ++r) {
          for (size_t c = 0; c < cols; ++c) ga[r * cols + c] += go[c] * inv;
        }
      });
    });
  }
  return out;
}

TensorPtr Tape::sum_rows(const TensorPtr& a) {
  check_finite(a, "sum_rows");
  const size_t rows = a->rows(), cols = a->cols();
  auto out = Tensor::zeros(1, cols, a->dtype());
  dispatch(a->dtype(), [&](auto tag) {
    using T = decltype(tag);
    const T* pa = vals<T>(a);
    T* po = vals_mut<T>(out);
    for (size_t r = 0; r < rows; ++r) {
      for (size_t c = 0; c < cols; ++c) po[c] += pa[r * cols + c];
    }
  });
  if (a->requires_grad()) {
    record(out, {a}, [a, out, rows, cols]() {
      dispatch(a->dtype(), [&](auto tag) {
        using T = decltype(tag);
        const T* go = grads<T>(out);
        T* ga = grads<T>(a);
        for (size_t r = 0; r < rows; ++r) {
          for (size_t c = 0; c < cols; ++c) ga[r * cols + c] += go[c];
        }
      });
    });
  }
  return out;
}

TensorPtr Tape::scale_rows(const TensorPtr& a, const std::vector<double>& w) {
  check_finite(a, "scale_rows");
  if (w.size() != a->rows()) {
    throw std::invalid_argument("scale_rows: weight count " + std::to_string(w.size()) +
                                " != rows of " + a->shape_str());
  }
  const size_t rows = a->rows(), cols = a->cols();
  auto out = Tensor::zeros(rows, cols, a->dtype());
  dispatch(a->dtype(), [&](auto tag) {
    using T = decltype(tag);
    const T* pa = vals<T>(a);
    T* po = vals_mut<T>(out);
    for (size_t r = 0; r < rows; ++r) {
      const T wr = static_cast<T>(w[r]);
      for (size_t c = 0; c < cols; ++c) po[r * cols + c] = pa[r * cols + c] * wr;
    }
  });
  if (a->requires_grad()) {
    record(out, {a}, [a, out, w, rows, cols]() {
      dispatch(a->dtype(), [&](auto tag) {
        using T = decltype(tag);
        const T* go = grads<T>(out);
        T* ga = grads<T>(a);
        for (size_t r = 0; r < rows; ++r) {
          const T wr = static_cast<T>(w[r]);
          for (size_t c = 0; c < cols; ++c) ga[r * cols + c] += go[r * cols + c] * wr;
        }
      });
    });
  }
  return out;
}

TensorPtr Tape::l2_norm_rows(const TensorPtr& a) {
  check_finite(a, "l2_norm_rows");
  const size_t rows = a->rows(), cols = a->cols();
  auto out = Tensor::zeros(rows, 1, a->dtype());
  dispatch(a->dtype(), [&](auto tag) {
    using T = decltype(tag);
    const T* pa = vals<T>(a);
    T* po = vals_mut<T>(out);
    for (size_t r = 0; r < rows; ++r) {
      T acc = T(0);
      for (size_t c = 0; c < cols; ++c) {
        const T v = pa[r * cols + c];
        acc += v * v;
      }
      po[r] = std::sqrt(acc);
    }
  });
  if (a->requires_grad()) {
    record(out, {a}, [a, out, rows, cols]() {
      dispatch(a->dtype(), [&](auto tag) {
        using T = decltype(tag);
        const T* go = grads<T>(out);
        const T* pa = vals<T>(a);
        const T* po = vals<T>(out);
        T* ga = grads<T>(a);
        for (size_t r = 0; r < rows; ++r) {
          const T denom = std::max(po[r], static_cast<T>(Tape::kEpsNorm));
          const T g = go[r] / denom;
          for (size_t c = 0; c < cols; ++c) ga[r * cols + c] += g * pa[r * cols + c];
        }
      });
    });
  }
  return out;
}

TensorPtr Tape::dot_rows(const TensorPtr& a, const TensorPtr& b) {
  check_same_dtype("dot_rows", *a, *b);
  check_finite(a, "dot_rows");
  check_finite(b, "dot_rows");
  if (a->rows() != b->rows() || a->cols() != b->cols()) shape_error("dot_rows", *a, *b);
  const size_t rows = a->rows(), cols = a->cols();
  auto out = Tensor::zeros(rows, 1, a->dtype());
  dispatch(a->dtype(), [&](auto tag) {
    using T = decltype(tag);
    const T* pa = vals<T>(a);
    const T* pb = vals<T>(b);
    T* po = vals_mut<T>(out);
    for (size_t r = 0; r < rows; ++r) {
      T acc = T(0);
      for (size_t c = 0; c < cols; ++c) acc += pa[r * cols + c] * pb[r * cols + c];
      po[r] = acc;
    }
  });
  if (a->requires_grad() || b->requires_grad()) {
    record(out, {a, b}, [a, b, out, rows, cols]() {
      dispatch(a->dtype(), [&](auto tag) {
        using T = decltype(tag);
        const T* go = grads<T>(out);
        const T* pa = vals<T>(a);
        const T* pb = vals<T>(b);
        for (size_t r = 0; r < rows; ++r) {
          const T g = go[r];
          if (a->requires_grad()) {
            T* ga = grads<T>(a);
            for (size_t c = 0; c < cols; ++c) ga[r * cols + c] += g * pb[r * cols + c];
          }
          if (b->requires_grad()) {
            T* gb = grads<T>(b);
            for (size_t c = 0; c < cols; ++c) gb[r * cols + c] += g * pa[r * cols + c];
          }
        }
      });
    });
  }
  return out;
}

TensorPtr Tape::softmax(const TensorPtr& a) {
  check_finite(a, "softmax");
  const size_t rows = a->rows(), cols = a->cols();
  auto out = Tensor::zeros(rows, cols, a->dtype());
  dispatch(a->dtype(), [&](auto tag) {
    using T = decltype(tag);
    const T* pa = vals<T>(a);
    T* po = vals_mut<T>(out);
    for (size_t r = 0; r < rows; ++r) {
      const T* row = pa + r * cols;
      T* orow = po + r * cols;
      T mx = row[0];
      for (size_t c = 1; c < cols; ++c) mx = std::max(mx, row[c]);
      T denom = T(0);
      for (size_t c = 0; c < cols; ++c) {
        orow[c] = std::exp(row[c] - mx);
        denom += orow[c];
      }
      for (size_t c = 0; c < cols; ++c) orow[c] /= denom;
    }
  });
  if (a->requires_grad()) {
    record(out, {a}, [a, out, rows, cols]() {
      dispatch(a->dtype(), [&](auto tag) {
        using T = decltype(tag);
        const T* go = grads<T>(out);
        const T* po = vals<T>(out);
        T* ga = grads<T>(a);
        for (size_t r = 0; r < rows; ++r) {
          const T* g = go + r * cols;
          const T* y = po + r * cols;
          T dot = T(0);
          for (size_t c = 0; c < cols; ++c) dot += g[c] * y[c];
          for (size_t c = 0; c < cols; ++c) ga[r * cols + c] += y[c] * (g[c] - dot);
        }
      });
    });
  }
  return out;
}

TensorPtr Tape::log(const TensorPtr& a) {
  check_finite(a, "log");
  auto out = Tensor::zeros(a->rows(), a->cols(), a->dtype());
  dispatch(a->dtype(), [&](auto tag) {
    using T = decltype(tag);
    const T* pa = vals<T>(a);
    T* po = vals_mut<T>(out);
    for (size_t i = 0; i < a->size(); ++i) po[i] = std::log(pa[i]);
  });
  if (a->requires_grad()) {
    record(out, {a}, [a, out]() {
      dispatch(a->dtype(), [&](auto tag) {
        using T = decltype(tag);
        const T* go = grads<T>(out);
        const T* pa = vals<T>(a);
        T* ga = grads<T>(a);
        for (size_t i = 0; i < a->size(); ++i) ga[i] += go[i] / pa[i];
      });
    });
  }
  return out;
}

TensorPtr Tape::exp(const TensorPtr& a) {
  check_finite(a, "exp");
  auto out = Tensor::zeros(a->rows(), a->cols(), a->dtype());
  dispatch(a->dtype(), [&](auto tag) {
    using T = decltype(tag);
    const T* pa = vals<T>(a);
    T* po = vals_mut<T>(out);
    for (size_t i = 0; i < a->size(); ++i) po[i] = std::exp(pa[i]);
  });
  if (a->requires_grad()) {
    record(out, {a}, [a, out]() {
      dispatch(a->dtype(), [&](auto tag) {
        using T = decltype(tag);
        const T* go = grads<T>(out);
        const T* po = vals<T>(out);
        T* ga = grads<T>(a);
        for (size_t i = 0; i < a->size(); ++i) ga[i] += go[i] * po[i];
      });
    });
  }
  return out;
}

TensorPtr Tape::concat_rows(const std::vector<TensorPtr>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat_rows: no inputs");
  const size_t cols = parts[0]->cols();
  size_t rows = 0;
  bool any_grad = false;
  for (const auto& p : parts) {
    check_finite(p, "concat_rows");
    if (p->cols() != cols) shape_error("concat_rows", *parts[0], *p);
    check_same_dtype("concat_rows", *parts[0], *p);
    rows += p->rows();
    any_grad = any_grad || p->requires_grad();
  }
  auto out = Tensor::zeros(rows, cols, parts[0]->dtype());
  dispatch(out->dtype(), [&](auto tag) {
    using T = decltype(tag);
    T* po = vals_mut<T>(out);
    size_t off = 0;
    for (const auto& p : parts) {
      const T* pp = vals<T>(p);
      std::copy(pp, pp + p->size(), po + off);
      off += p->size();
    }
  });
  if (any_grad) {
    record(out, parts, [parts, out]() {
      dispatch(out->dtype(), [&](auto tag) {
        using T = decltype(tag);
        const T* go = grads<T>(out);
        size_t off = 0;
        for (const auto& p : parts) {
          if (p->requires_grad()) {
            T* gp = grads<T>(p);
            for (size_t i = 0; i < p->size(); ++i) gp[i] += go[off + i];
          }
          off += p->size();
        }
      });
    });
  }
  return out;
}

TensorPtr Tape::cosine_rows(const TensorPtr& a, const TensorPtr& b) {
  check_same_dtype("cosine_rows", *a, *b);
  check_finite(a, "cosine_rows");
  check_finite(b, "cosine_rows");
  if (a->rows() != b->rows() || a->cols() != b->cols()) shape_error("cosine_rows", *a, *b);
  const size_t rows = a->rows(), cols = a->cols();
  auto out = Tensor::zeros(rows, 1, a->dtype());
  // Saved per-row norms (clamped) for the backward pass.
  auto saved = std::make_shared<std::vector<double>>(rows * 3);
  uint64_t clamps = 0;
  dispatch(a->dtype(), [&](auto tag) {
    using T = decltype(tag);
    const T* pa = vals<T>(a);
    const T* pb = vals<T>(b);
    T* po = vals_mut<T>(out);
    for (size_t r = 0; r < rows; ++r) {
      double dot = 0.0, na2 = 0.0, nb2 = 0.0;
      for (size_t c = 0; c < cols; ++c) {
        const double av = static_cast<double>(pa[r * cols + c]);
        const double bv = static_cast<double>(pb[r * cols + c]);
        dot += av * bv;
        na2 += av * av;
        nb2 += bv * bv;
      }
      double na = std::sqrt(na2);
      double nb = std::sqrt(nb2);
      bool clamped_a = na < kEpsNorm;
      bool clamped_b = nb < kEpsNorm;
      if (clamped_a) na = kEpsNorm;
      if (clamped_b) nb = kEpsNorm;
      if (clamped_a || clamped_b) ++clamps;
      const double s = dot / (na * nb);
      (*saved)[r * 3 + 0] = clamped_a ? -na : na;  // sign marks the clamped path
      (*saved)[r * 3 + 1] = clamped_b ? -nb : nb;
      (*saved)[r * 3 + 2] = s;
      po[r] = static_cast<T>(std::clamp(s, -1.0, 1.0));
    }
  });
  clamped_cosines_ += clamps;
  if (a->requires_grad() || b->requires_grad()) {
    record(out, {a, b}, [a, b, out, saved, rows, cols]() {
      dispatch(a->dtype(), [&](auto tag) {
        using T = decltype(tag);
        const T* go = grads<T>(out);
        const T* pa = vals<T>(a);
        const T* pb = vals<T>(b);
        for (size_t r = 0; r < rows; ++r) {
          const double g = static_cast<double>(go[r]);
          if (g == 0.0) continue;
          const double na_signed = (*saved)[r * 3 + 0];
          const double nb_signed = (*saved)[r * 3 + 1];
          const double s = (*saved)[r * 3 + 2];
          const bool clamped_a = na_signed < 0.0;
          const bool clamped_b = nb_signed < 0.0;
          const double na = std::abs(na_signed);
          const double nb = std::abs(nb_signed);
          const double inv = 1.0 / (na * nb);
          if (a->requires_grad()) {
            T* ga = grads<T>(a);
            for (size_t c = 0; c < cols; ++c) {
              const double av = static_cast<double>(pa[r * cols + c]);
              const double bv = static_cast<double>(pb[r * cols + c]);
              double d = bv * inv;
              if (!clamped_a) d -= s * av / (na * na);
              ga[r * cols + c] += static_cast<T>(g * d);
            }
          }
          if (b->requires_grad()) {
            T* gb = grads<T>(b);
            for (size_t c = 0; c < cols; ++c) {
              const double av = static_cast<double>(pa[r * cols + c]);
              const double bv = static_cast<double>(pb[r * cols + c]);
              double d = av * inv;
              if (!clamped_b) d -= s * bv / (nb * nb);
              gb[r * cols + c] += static_cast<T>(g * d);
            }
          }
        }
      });
    });
  }
  return out;
}

TensorPtr Tape::cosine_similarity(const TensorPtr& x, const TensorPtr& y) {
  if (x->size() != y->size() || (x->rows() != 1 && x->cols() != 1) ||
      (y->rows() != 1 && y->cols() != 1)) {
    shape_error("cosine_similarity", *x, *y);
  }
  // Flatten both to a single row; cosine_rows treats it as one pair.
  auto flatten = [this](const TensorPtr& t) -> TensorPtr {
    if (t->rows() == 1) return t;
    auto flat = Tensor::zeros(1, t->size(), t->dtype(), false);
    for (size_t i = 0; i < t->size(); ++i) flat->set_value(i, t->value(i));
    if (t->requires_grad()) {
      record(flat, {t}, [t, flat]() {
        for (size_t i = 0; i < t->size(); ++i) {
          t->accumulate_grad(i, flat->grad(i));
        }
      });
    }
    return flat;
  };
  return cosine_rows(flatten(x), flatten(y));
}

}  // namespace graphlog
