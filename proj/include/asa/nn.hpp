#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "asa/graph.hpp"
#include "asa/optim.hpp"

namespace asa::nn {

// Uniform init scaled by 1/sqrt(fan_in), drawn in double precision so the
// float and double instantiations of a model agree for a given seed.
template <typename T>
void init_uniform(Parameter<T>& p, int fan_in, std::mt19937_64& rng) {
  const double bound = 1.0 / std::sqrt(double(std::max(fan_in, 1)));
  for (auto& w : p.value->data) w = T(uniform_range(rng, -bound, bound));
}

template <typename T>
void fill(Parameter<T>& p, T v) {
  std::fill(p.value->data.begin(), p.value->data.end(), v);
}

template <typename T>
struct Linear {
  Parameter<T> weight;  // in x out
  Parameter<T> bias;    // 1 x out

  Linear() = default;
  Linear(const std::string& name, int in, int out)
      : weight(name + ".weight", in, out), bias(name + ".bias", 1, out) {}

  void init(std::mt19937_64& rng) {
    init_uniform(weight, weight.value->rows, rng);
    fill(bias, T(0));
  }

  TensorPtr<T> forward(Tape<T>& tape, const TensorPtr<T>& x) {
    return ops::add_bias(tape, ops::matmul(tape, x, weight.value), bias.value);
  }

  void collect(std::vector<Parameter<T>*>& out) {
    out.push_back(&weight);
    out.push_back(&bias);
  }
};

template <typename T>
struct RmsNorm {
  Parameter<T> gain;  // 1 x width
  T eps = T(1e-5);

  RmsNorm() = default;
  RmsNorm(const std::string& name, int width) : gain(name + ".gain", 1, width) { fill(gain, T(1)); }

  TensorPtr<T> forward(Tape<T>& tape, const TensorPtr<T>& x) {
    return ops::rms_norm(tape, x, gain.value, eps);
  }

  void collect(std::vector<Parameter<T>*>& out) { out.push_back(&gain); }
};

// Pre-norm single-head self-attention block with a gated feed-forward:
//   h  = x + Wo * Attn(RMSNorm(x))
//   y  = h + W2 * (silu(W1 * RMSNorm(h)) . (W3 * RMSNorm(h)))
// Rotary phases on query/key can be switched off for order-invariance tests.
// Rows at masked positions receive zero attention weight from every query
// and are zeroed in the output.
template <typename T>
struct EncoderLayer {
  int width = 0;
  int ffn_width = 0;
  bool rotary = true;

  RmsNorm<T> norm_attn, norm_ffn;
  Parameter<T> wq, wk, wv, wo;      // width x width, no bias
  Parameter<T> w_gate, w_up;        // width x ffn
  Parameter<T> w_down;              // ffn x width

  EncoderLayer() = default;
  EncoderLayer(const std::string& name, int w, bool use_rotary)
      : width(w),
        ffn_width(2 * w),
        rotary(use_rotary),
        norm_attn(name + ".norm_attn", w),
        norm_ffn(name + ".norm_ffn", w),
        wq(name + ".wq", w, w),
        wk(name + ".wk", w, w),
        wv(name + ".wv", w, w),
        wo(name + ".wo", w, w),
        w_gate(name + ".ffn_gate", w, 2 * w),
        w_up(name + ".ffn_up", w, 2 * w),
        w_down(name + ".ffn_down", 2 * w, w) {}

  void init(std::mt19937_64& rng) {
    fill(norm_attn.gain, T(1));
    fill(norm_ffn.gain, T(1));
    init_uniform(wq, width, rng);
    init_uniform(wk, width, rng);
    init_uniform(wv, width, rng);
    init_uniform(wo, width, rng);
    init_uniform(w_gate, width, rng);
    init_uniform(w_up, width, rng);
    init_uniform(w_down, ffn_width, rng);
  }

  TensorPtr<T> forward(Tape<T>& tape, const TensorPtr<T>& x, const std::vector<uint8_t>& valid) {
    require(x->cols == width, "encoder layer: input width ", x->cols, " != ", width);
    require(int(valid.size()) == x->rows, "encoder layer: mask length mismatch");

    auto a = norm_attn.forward(tape, x);
    auto q = ops::matmul(tape, a, wq.value);
    auto k = ops::matmul(tape, a, wk.value);
    auto v = ops::matmul(tape, a, wv.value);
    if (rotary) {
      q = ops::rotary_phases(tape, q);
      k = ops::rotary_phases(tape, k);
    }
    auto scores = ops::scale(tape, ops::matmul_nt(tape, q, k), T(1) / std::sqrt(T(width)));
    auto attn = ops::masked_softmax_rows(tape, scores, valid);
    auto ctx = ops::matmul(tape, attn, v);
    auto h = ops::add(tape, x, ops::matmul(tape, ctx, wo.value));

    auto f = norm_ffn.forward(tape, h);
    auto gate = ops::matmul(tape, f, w_gate.value);
    auto up = ops::matmul(tape, f, w_up.value);
    auto ffn = ops::matmul(tape, ops::silu_gate(tape, up, gate), w_down.value);
    auto y = ops::add(tape, h, ffn);
    return ops::zero_masked_rows(tape, y, valid);
  }

  // Forward-only attention weight matrix (rows = queries, cols = keys),
  // for inspection in tests and diagnostics.
  std::vector<T> attention_weights(const TensorPtr<T>& x, const std::vector<uint8_t>& valid) {
    Tape<T> scratch;
    auto xc = make_tensor<T>(x->rows, x->cols);
    xc->data = x->data;
    auto a = norm_attn.forward(scratch, xc);
    // parameters require grad, so detach by copying values
    auto detach = [](const TensorPtr<T>& t) {
      auto c = make_tensor<T>(t->rows, t->cols);
      c->data = t->data;
      return c;
    };
    auto q = ops::matmul(scratch, detach(a), detach(wq.value));
    auto k = ops::matmul(scratch, detach(a), detach(wk.value));
    if (rotary) {
      q = ops::rotary_phases(scratch, q);
      k = ops::rotary_phases(scratch, k);
    }
    auto scores = ops::scale(scratch, ops::matmul_nt(scratch, q, k), T(1) / std::sqrt(T(width)));
    auto attn = ops::masked_softmax_rows(scratch, scores, valid);
    return attn->data;
  }

  void collect(std::vector<Parameter<T>*>& out) {
    norm_attn.collect(out);
    norm_ffn.collect(out);
    for (auto* p : {&wq, &wk, &wv, &wo, &w_gate, &w_up, &w_down}) out.push_back(p);
  }
};

// Attention pooling with a learned query vector.
template <typename T>
struct AttentionPool {
  Parameter<T> query;  // 1 x width

  AttentionPool() = default;
  AttentionPool(const std::string& name, int width) : query(name + ".query", 1, width) {}

  void init(std::mt19937_64& rng) { init_uniform(query, query.value->cols, rng); }

  TensorPtr<T> forward(Tape<T>& tape, const TensorPtr<T>& h, const std::vector<uint8_t>& valid,
                       std::vector<T>* weights_out = nullptr) {
    return ops::attention_pool(tape, h, query.value, valid, weights_out);
  }

  void collect(std::vector<Parameter<T>*>& out) { out.push_back(&query); }
};

}  // namespace asa::nn
