#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <utility>
#include <vector>

#include "asa/kernels.hpp"
#include "asa/tensor.hpp"

// Reverse-mode tape. Ops compute forward eagerly and, when any input
// requires a gradient, record a closure that scatters the output gradient
// back into the inputs. Tape::backward runs the closures in reverse order.

namespace asa {

template <typename T>
class Tape {
 public:
  void record(std::function<void()> fn) { fns_.push_back(std::move(fn)); }

  // root must be a 1x1 scalar; its gradient is seeded with 1.
  void backward(const TensorPtr<T>& root) {
    require(root->numel() == 1, "backward: root must be scalar, got ", shape_str(*root));
    require(root->requires_grad, "backward: root does not require grad");
    root->grad[0] = T(1);
    for (auto it = fns_.rbegin(); it != fns_.rend(); ++it) (*it)();
  }

  void clear() { fns_.clear(); }
  size_t size() const { return fns_.size(); }

 private:
  std::vector<std::function<void()>> fns_;
};

namespace ops {

template <typename T>
TensorPtr<T> output_like(int rows, int cols, bool needs_grad) {
  return make_tensor<T>(rows, cols, needs_grad);
}

template <typename T>
bool any_grad(const TensorPtr<T>& a) {
  return a->requires_grad;
}
template <typename T, typename... Rest>
bool any_grad(const TensorPtr<T>& a, const Rest&... rest) {
  return a->requires_grad || any_grad(rest...);
}

template <typename T>
TensorPtr<T> matmul(Tape<T>& tape, const TensorPtr<T>& a, const TensorPtr<T>& b) {
  require(a->cols == b->rows, "matmul: shape mismatch ", shape_str(*a), " * ", shape_str(*b));
  auto out = output_like<T>(a->rows, b->cols, any_grad(a, b));
  kernels::matmul_nn(a->data.data(), b->data.data(), out->data.data(), a->rows, a->cols, b->cols);
  if (out->requires_grad) {
    tape.record([a, b, out] {
      if (a->requires_grad)
        kernels::matmul_nt(out->grad.data(), b->data.data(), a->grad.data(), a->rows, b->cols,
                           a->cols, true);
      if (b->requires_grad)
        kernels::matmul_tn(a->data.data(), out->grad.data(), b->grad.data(), b->rows, a->rows,
                           b->cols, true);
    });
  }
  return out;
}

// out = a * b^T  (a: m x k, b: n x k -> m x n); used for attention scores.
template <typename T>
TensorPtr<T> matmul_nt(Tape<T>& tape, const TensorPtr<T>& a, const TensorPtr<T>& b) {
  require(a->cols == b->cols, "matmul_nt: shape mismatch ", shape_str(*a), " * ", shape_str(*b),
          "^T");
  auto out = output_like<T>(a->rows, b->rows, any_grad(a, b));
  kernels::matmul_nt(a->data.data(), b->data.data(), out->data.data(), a->rows, a->cols, b->rows);
  if (out->requires_grad) {
    tape.record([a, b, out] {
      if (a->requires_grad)
        kernels::matmul_nn(out->grad.data(), b->data.data(), a->grad.data(), a->rows, b->rows,
                           a->cols, true);
      if (b->requires_grad)
        kernels::matmul_tn(out->grad.data(), a->data.data(), b->grad.data(), b->rows, a->rows,
                           b->cols, true);
    });
  }
  return out;
}

template <typename T>
TensorPtr<T> add(Tape<T>& tape, const TensorPtr<T>& a, const TensorPtr<T>& b) {
  require(a->rows == b->rows && a->cols == b->cols, "add: shape mismatch ", shape_str(*a), " vs ",
          shape_str(*b));
  auto out = output_like<T>(a->rows, a->cols, any_grad(a, b));
  for (size_t i = 0; i < out->numel(); ++i) out->data[i] = a->data[i] + b->data[i];
  if (out->requires_grad) {
    tape.record([a, b, out] {
      if (a->requires_grad)
        for (size_t i = 0; i < out->numel(); ++i) a->grad[i] += out->grad[i];
      if (b->requires_grad)
        for (size_t i = 0; i < out->numel(); ++i) b->grad[i] += out->grad[i];
    });
  }
  return out;
}

// x: m x n, bias: 1 x n broadcast over rows.
template <typename T>
TensorPtr<T> add_bias(Tape<T>& tape, const TensorPtr<T>& x, const TensorPtr<T>& bias) {
  require(bias->rows == 1 && bias->cols == x->cols, "add_bias: bias ", shape_str(*bias),
          " does not match ", shape_str(*x));
  auto out = output_like<T>(x->rows, x->cols, any_grad(x, bias));
  for (int i = 0; i < x->rows; ++i)
    for (int j = 0; j < x->cols; ++j) out->at(i, j) = x->at(i, j) + bias->data[j];
  if (out->requires_grad) {
    tape.record([x, bias, out] {
      if (x->requires_grad)
        for (size_t i = 0; i < out->numel(); ++i) x->grad[i] += out->grad[i];
      if (bias->requires_grad)
        for (int i = 0; i < out->rows; ++i)
          for (int j = 0; j < out->cols; ++j) bias->grad[j] += out->gat(i, j);
    });
  }
  return out;
}

template <typename T>
TensorPtr<T> mul(Tape<T>& tape, const TensorPtr<T>& a, const TensorPtr<T>& b) {
  require(a->rows == b->rows && a->cols == b->cols, "mul: shape mismatch ", shape_str(*a), " vs ",
          shape_str(*b));
  auto out = output_like<T>(a->rows, a->cols, any_grad(a, b));
  for (size_t i = 0; i < out->numel(); ++i) out->data[i] = a->data[i] * b->data[i];
  if (out->requires_grad) {
    tape.record([a, b, out] {
      if (a->requires_grad)
        for (size_t i = 0; i < out->numel(); ++i) a->grad[i] += out->grad[i] * b->data[i];
      if (b->requires_grad)
        for (size_t i = 0; i < out->numel(); ++i) b->grad[i] += out->grad[i] * a->data[i];
    });
  }
  return out;
}

template <typename T>
TensorPtr<T> scale(Tape<T>& tape, const TensorPtr<T>& x, T c) {
  auto out = output_like<T>(x->rows, x->cols, x->requires_grad);
  for (size_t i = 0; i < out->numel(); ++i) out->data[i] = x->data[i] * c;
  if (out->requires_grad) {
    tape.record([x, out, c] {
      for (size_t i = 0; i < out->numel(); ++i) x->grad[i] += out->grad[i] * c;
    });
  }
  return out;
}

// Feature-dimension concatenation: [a | b], row counts must match.
template <typename T>
TensorPtr<T> concat_cols(Tape<T>& tape, const TensorPtr<T>& a, const TensorPtr<T>& b) {
  require(a->rows == b->rows, "concat_cols: row mismatch ", shape_str(*a), " vs ", shape_str(*b));
  auto out = output_like<T>(a->rows, a->cols + b->cols, any_grad(a, b));
  for (int i = 0; i < a->rows; ++i) {
    for (int j = 0; j < a->cols; ++j) out->at(i, j) = a->at(i, j);
    for (int j = 0; j < b->cols; ++j) out->at(i, a->cols + j) = b->at(i, j);
  }
  if (out->requires_grad) {
    tape.record([a, b, out] {
      for (int i = 0; i < out->rows; ++i) {
        if (a->requires_grad)
          for (int j = 0; j < a->cols; ++j) a->gat(i, j) += out->gat(i, j);
        if (b->requires_grad)
          for (int j = 0; j < b->cols; ++j) b->gat(i, j) += out->gat(i, a->cols + j);
      }
    });
  }
  return out;
}

// Stack row blocks vertically; all inputs share the column count.
template <typename T>
TensorPtr<T> stack_rows(Tape<T>& tape, const std::vector<TensorPtr<T>>& parts) {
  require(!parts.empty(), "stack_rows: no inputs");
  int cols = parts[0]->cols, rows = 0;
  bool needs = false;
  for (const auto& p : parts) {
    require(p->cols == cols, "stack_rows: column mismatch");
    rows += p->rows;
    needs = needs || p->requires_grad;
  }
  auto out = output_like<T>(rows, cols, needs);
  int r = 0;
  for (const auto& p : parts) {
    std::copy(p->data.begin(), p->data.end(), out->data.begin() + size_t(r) * cols);
    r += p->rows;
  }
  if (needs) {
    tape.record([parts, out, cols] {
      int r = 0;
      for (const auto& p : parts) {
        if (p->requires_grad)
          for (size_t i = 0; i < p->numel(); ++i) p->grad[i] += out->grad[size_t(r) * cols + i];
        r += p->rows;
      }
    });
  }
  return out;
}

// Replicate a 1 x n row m times.
template <typename T>
TensorPtr<T> broadcast_row(Tape<T>& tape, const TensorPtr<T>& v, int m) {
  require(v->rows == 1, "broadcast_row: input must be a row vector, got ", shape_str(*v));
  auto out = output_like<T>(m, v->cols, v->requires_grad);
  for (int i = 0; i < m; ++i)
    std::copy(v->data.begin(), v->data.end(), out->data.begin() + size_t(i) * v->cols);
  if (out->requires_grad) {
    tape.record([v, out] {
      for (int i = 0; i < out->rows; ++i)
        for (int j = 0; j < out->cols; ++j) v->grad[j] += out->gat(i, j);
    });
  }
  return out;
}

template <typename T>
TensorPtr<T> softmax_rows(Tape<T>& tape, const TensorPtr<T>& x) {
  auto out = output_like<T>(x->rows, x->cols, x->requires_grad);
  kernels::softmax_rows(x->data.data(), out->data.data(), x->rows, x->cols);
  if (out->requires_grad) {
    tape.record([x, out] {
      for (int i = 0; i < out->rows; ++i) {
        T dot = T(0);
        for (int j = 0; j < out->cols; ++j) dot += out->gat(i, j) * out->at(i, j);
        for (int j = 0; j < out->cols; ++j)
          x->gat(i, j) += out->at(i, j) * (out->gat(i, j) - dot);
      }
    });
  }
  return out;
}

// Row softmax over valid columns only; invalid columns get weight 0.
template <typename T>
TensorPtr<T> masked_softmax_rows(Tape<T>& tape, const TensorPtr<T>& x,
                                 const std::vector<uint8_t>& col_valid) {
  require(int(col_valid.size()) == x->cols, "masked_softmax: mask length ", col_valid.size(),
          " vs cols ", x->cols);
  bool any_valid = false;
  for (uint8_t v : col_valid) any_valid = any_valid || v;
  require(any_valid, "masked_softmax: all positions masked");
  auto out = output_like<T>(x->rows, x->cols, x->requires_grad);
  kernels::masked_softmax_rows(x->data.data(), out->data.data(), x->rows, x->cols,
                               col_valid.data());
  if (out->requires_grad) {
    tape.record([x, out] {
      // zero weights at masked columns make the plain softmax backward exact
      for (int i = 0; i < out->rows; ++i) {
        T dot = T(0);
        for (int j = 0; j < out->cols; ++j) dot += out->gat(i, j) * out->at(i, j);
        for (int j = 0; j < out->cols; ++j)
          x->gat(i, j) += out->at(i, j) * (out->gat(i, j) - dot);
      }
    });
  }
  return out;
}

template <typename T>
TensorPtr<T> rms_norm(Tape<T>& tape, const TensorPtr<T>& x, const TensorPtr<T>& gain, T eps) {
  require(gain->rows == 1 && gain->cols == x->cols, "rms_norm: gain ", shape_str(*gain),
          " does not match ", shape_str(*x));
  auto out = output_like<T>(x->rows, x->cols, any_grad(x, gain));
  std::vector<T> inv_rms(size_t(std::max(x->rows, 1)));
  kernels::rms_norm_rows(x->data.data(), gain->data.data(), out->data.data(), x->rows, x->cols,
                         eps, inv_rms.data());
  if (out->requires_grad) {
    tape.record([x, gain, out, inv_rms = std::move(inv_rms)] {
      const int n = x->cols;
      for (int i = 0; i < x->rows; ++i) {
        const T inv = inv_rms[i];
        T dot = T(0);  // sum_j dy_j * g_j * x_j
        for (int j = 0; j < n; ++j) dot += out->gat(i, j) * gain->data[j] * x->at(i, j);
        for (int j = 0; j < n; ++j) {
          if (x->requires_grad)
            x->gat(i, j) += inv * (out->gat(i, j) * gain->data[j] -
                                   x->at(i, j) * dot * inv * inv / T(n));
          if (gain->requires_grad) gain->grad[j] += out->gat(i, j) * x->at(i, j) * inv;
        }
      }
    });
  }
  return out;
}

// x * silu(g), elementwise; silu(g) = g * sigmoid(g).
template <typename T>
TensorPtr<T> silu_gate(Tape<T>& tape, const TensorPtr<T>& x, const TensorPtr<T>& g) {
  require(x->rows == g->rows && x->cols == g->cols, "silu_gate: shape mismatch ", shape_str(*x),
          " vs ", shape_str(*g));
  auto out = output_like<T>(x->rows, x->cols, any_grad(x, g));
  for (size_t i = 0; i < out->numel(); ++i) {
    T s = T(1) / (T(1) + std::exp(-g->data[i]));
    out->data[i] = x->data[i] * g->data[i] * s;
  }
  if (out->requires_grad) {
    tape.record([x, g, out] {
      for (size_t i = 0; i < out->numel(); ++i) {
        T s = T(1) / (T(1) + std::exp(-g->data[i]));
        T silu = g->data[i] * s;
        if (x->requires_grad) x->grad[i] += out->grad[i] * silu;
        if (g->requires_grad)
          g->grad[i] += out->grad[i] * x->data[i] * (s + silu * (T(1) - s));
      }
    });
  }
  return out;
}

// Rotary phases: rotate column pairs (2i, 2i+1) of row p by p * base^(-2i/d).
// An odd trailing column passes through. Orthogonal per row, so the backward
// pass is the inverse rotation applied to the output gradient.
template <typename T>
TensorPtr<T> rotary_phases(Tape<T>& tape, const TensorPtr<T>& x, double base = 10000.0) {
  const int d = x->cols;
  const int half = d / 2;
  std::vector<T> omega(half);
  for (int i = 0; i < half; ++i) omega[i] = T(std::pow(base, -2.0 * i / d));
  auto out = output_like<T>(x->rows, d, x->requires_grad);
  for (int p = 0; p < x->rows; ++p) {
    for (int i = 0; i < half; ++i) {
      T th = T(p) * omega[i];
      T c = std::cos(th), s = std::sin(th);
      T a = x->at(p, 2 * i), b = x->at(p, 2 * i + 1);
      out->at(p, 2 * i) = a * c - b * s;
      out->at(p, 2 * i + 1) = a * s + b * c;
    }
    if (d % 2) out->at(p, d - 1) = x->at(p, d - 1);
  }
  if (out->requires_grad) {
    tape.record([x, out, omega = std::move(omega), half, d] {
      for (int p = 0; p < x->rows; ++p) {
        for (int i = 0; i < half; ++i) {
          T th = T(p) * omega[i];
          T c = std::cos(th), s = std::sin(th);
          T da = out->gat(p, 2 * i), db = out->gat(p, 2 * i + 1);
          x->gat(p, 2 * i) += da * c + db * s;
          x->gat(p, 2 * i + 1) += -da * s + db * c;
        }
        if (d % 2) x->gat(p, d - 1) += out->gat(p, d - 1);
      }
    });
  }
  return out;
}

// Zero out rows whose valid flag is false.
template <typename T>
TensorPtr<T> zero_masked_rows(Tape<T>& tape, const TensorPtr<T>& x,
                              const std::vector<uint8_t>& valid) {
  require(int(valid.size()) == x->rows, "zero_masked_rows: mask length mismatch");
  auto out = output_like<T>(x->rows, x->cols, x->requires_grad);
  for (int i = 0; i < x->rows; ++i)
    if (valid[i])
      for (int j = 0; j < x->cols; ++j) out->at(i, j) = x->at(i, j);
  if (out->requires_grad) {
    tape.record([x, out, valid] {
      for (int i = 0; i < x->rows; ++i)
        if (valid[i])
          for (int j = 0; j < x->cols; ++j) x->gat(i, j) += out->gat(i, j);
    });
  }
  return out;
}

// Attention pooling: weights = softmax over valid rows of h . query,
// output = sum_i w_i h_i (1 x d). Optionally reports the weights.
template <typename T>
TensorPtr<T> attention_pool(Tape<T>& tape, const TensorPtr<T>& h, const TensorPtr<T>& query,
                            const std::vector<uint8_t>& valid,
                            std::vector<T>* weights_out = nullptr) {
  const int m = h->rows, d = h->cols;
  require(query->rows == 1 && query->cols == d, "attention_pool: query ", shape_str(*query),
          " does not match ", shape_str(*h));
  require(int(valid.size()) == m, "attention_pool: mask length mismatch");
  int n_valid = 0;
  for (uint8_t v : valid) n_valid += v ? 1 : 0;
  require(n_valid >= 1, "attention_pool: all rows masked");

  std::vector<T> scores(m, T(0));
  for (int i = 0; i < m; ++i)
    if (valid[i]) {
      T s = T(0);
      for (int j = 0; j < d; ++j) s += h->at(i, j) * query->data[j];
      scores[i] = s;
    }
  std::vector<T> w(m, T(0));
  kernels::serial::masked_softmax_row(scores.data(), w.data(), m, valid.data());
  if (weights_out) *weights_out = w;

  auto out = output_like<T>(1, d, any_grad(h, query));
  for (int j = 0; j < d; ++j) {
    T s = T(0);
    for (int i = 0; i < m; ++i) s += w[i] * h->at(i, j);
    out->data[j] = s;
  }
  if (out->requires_grad) {
    tape.record([h, query, out, valid, w = std::move(w)] {
      const int m = h->rows, d = h->cols;
      std::vector<T> dw(m, T(0));
      for (int i = 0; i < m; ++i) {
        if (!valid[i]) continue;
        T s = T(0);
        for (int j = 0; j < d; ++j) s += out->grad[j] * h->at(i, j);
        dw[i] = s;
        if (h->requires_grad)
          for (int j = 0; j < d; ++j) h->gat(i, j) += w[i] * out->grad[j];
      }
      // softmax backward on the pooling weights
      T dot = T(0);
      for (int i = 0; i < m; ++i) dot += dw[i] * w[i];
      for (int i = 0; i < m; ++i) {
        if (!valid[i]) continue;
        T ds = w[i] * (dw[i] - dot);
        if (h->requires_grad)
          for (int j = 0; j < d; ++j) h->gat(i, j) += ds * query->data[j];
        if (query->requires_grad)
          for (int j = 0; j < d; ++j) query->grad[j] += ds * h->at(i, j);
      }
    });
  }
  return out;
}

template <typename T>
TensorPtr<T> sum_all(Tape<T>& tape, const TensorPtr<T>& x) {
  auto out = output_like<T>(1, 1, x->requires_grad);
  T s = T(0);
  for (T v : x->data) s += v;
  out->data[0] = s;
  if (out->requires_grad) {
    tape.record([x, out] {
      for (size_t i = 0; i < x->numel(); ++i) x->grad[i] += out->grad[0];
    });
  }
  return out;
}

// Mean cross-entropy over rows of z against 0-based labels.
// Backward per row: (softmax(z) - one_hot(y)) / batch.
template <typename T>
TensorPtr<T> cross_entropy_mean(Tape<T>& tape, const TensorPtr<T>& z,
                                const std::vector<int>& labels0) {
  const int B = z->rows, C = z->cols;
  require(int(labels0.size()) == B, "cross_entropy: labels length ", labels0.size(),
          " vs batch ", B);
  for (int y : labels0) require(y >= 0 && y < C, "cross_entropy: label out of range: ", y);

  auto probs = std::make_shared<std::vector<T>>(size_t(B) * C);
  kernels::softmax_rows(z->data.data(), probs->data(), B, C);
  T loss = T(0);
  for (int i = 0; i < B; ++i) {
    const T* zr = z->data.data() + size_t(i) * C;
    T mx = zr[0];
    for (int j = 1; j < C; ++j) mx = std::max(mx, zr[j]);
    T lse = T(0);
    for (int j = 0; j < C; ++j) lse += std::exp(zr[j] - mx);
    loss += mx + std::log(lse) - zr[labels0[i]];
  }
  loss /= T(B);

  auto out = output_like<T>(1, 1, z->requires_grad);
  out->data[0] = loss;
  if (out->requires_grad) {
    tape.record([z, out, probs, labels0] {
      const int B = z->rows, C = z->cols;
      const T g = out->grad[0] / T(B);
      for (int i = 0; i < B; ++i)
        for (int j = 0; j < C; ++j)
          z->gat(i, j) += g * ((*probs)[size_t(i) * C + j] - (j == labels0[i] ? T(1) : T(0)));
    });
  }
  return out;
}

// Cosine similarity of two row vectors, clamped to [-1, 1].
// A zero vector yields 0 (and zero gradient); callers can watch the flag.
template <typename T>
TensorPtr<T> cosine(Tape<T>& tape, const TensorPtr<T>& u, const TensorPtr<T>& v,
                    bool* zero_vector_flag = nullptr) {
  require(u->rows == 1 && v->rows == 1 && u->cols == v->cols,
          "cosine: need equal-length row vectors, got ", shape_str(*u), " and ", shape_str(*v));
  const int n = u->cols;
  T uu = T(0), vv = T(0), uv = T(0);
  for (int j = 0; j < n; ++j) {
    uu += u->data[j] * u->data[j];
    vv += v->data[j] * v->data[j];
    uv += u->data[j] * v->data[j];
  }
  T nu = std::sqrt(uu), nv = std::sqrt(vv);
  bool zero = (nu == T(0) || nv == T(0));
  if (zero_vector_flag) *zero_vector_flag = zero;
  T c = zero ? T(0) : uv / (nu * nv);
  auto out = output_like<T>(1, 1, any_grad(u, v));
  out->data[0] = std::clamp(c, T(-1), T(1));
  if (out->requires_grad && !zero) {
    tape.record([u, v, out, nu, nv, c] {
      const T g = out->grad[0];
      for (int j = 0; j < u->cols; ++j) {
        if (u->requires_grad)
          u->grad[j] += g * (v->data[j] / (nu * nv) - c * u->data[j] / (nu * nu));
        if (v->requires_grad)
          v->grad[j] += g * (u->data[j] / (nu * nv) - c * v->data[j] / (nv * nv));
      }
    });
  }
  return out;
}

}  // namespace ops
}  // namespace asa
