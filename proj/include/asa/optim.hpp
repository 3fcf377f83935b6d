#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "asa/tensor.hpp"

namespace asa {

// A named trainable tensor plus its optimizer state. Moment buffers always
// match the value shape.
template <typename T>
struct Parameter {
  TensorPtr<T> value;
  std::string name;
  std::vector<T> m1, m2;  // first/second moment accumulators
  int64_t step = 0;

  Parameter() = default;
  Parameter(std::string n, int rows, int cols)
      : value(make_tensor<T>(rows, cols, true)), name(std::move(n)) {
    m1.assign(value->numel(), T(0));
    m2.assign(value->numel(), T(0));
  }
};

struct AdamWOptions {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;
};

// Decoupled weight decay update. The whole batch of gradients is validated
// before anything is mutated, so a non-finite gradient aborts the step with
// every parameter untouched.
template <typename T>
void adamw_step(std::vector<Parameter<T>*>& params, const AdamWOptions& opt) {
  for (const Parameter<T>* p : params) {
    require(p->value->requires_grad, "adamw: parameter '", p->name, "' has no grad buffer");
    for (T g : p->value->grad)
      require(std::isfinite(double(g)), "adamw: non-finite gradient in parameter '", p->name,
              "'");
  }
  for (Parameter<T>* p : params) {
    p->step += 1;
    const T b1 = T(opt.beta1), b2 = T(opt.beta2);
    const T bc1 = T(1) - std::pow(b1, T(p->step));
    const T bc2 = T(1) - std::pow(b2, T(p->step));
    auto& w = p->value->data;
    const auto& g = p->value->grad;
    for (size_t i = 0; i < w.size(); ++i) {
      p->m1[i] = b1 * p->m1[i] + (T(1) - b1) * g[i];
      p->m2[i] = b2 * p->m2[i] + (T(1) - b2) * g[i] * g[i];
      const T mhat = p->m1[i] / bc1;
      const T vhat = p->m2[i] / bc2;
      w[i] -= T(opt.lr) * (mhat / (std::sqrt(vhat) + T(opt.eps)) + T(opt.weight_decay) * w[i]);
    }
  }
}

template <typename T>
void zero_grads(std::vector<Parameter<T>*>& params) {
  for (Parameter<T>* p : params) p->value->zero_grad();
}

}  // namespace asa
