#pragma once

#include <cstddef>
#include <memory>
#include <vector>

#include "asa/util.hpp"

namespace asa {

// Dense row-major 2-D tensor. Row vectors are 1 x n, scalars 1 x 1.
// rows == 0 is legal (empty feature sequence); cols must be >= 1.
template <typename T>
struct Tensor {
  int rows = 0;
  int cols = 0;
  std::vector<T> data;
  std::vector<T> grad;  // same length as data iff requires_grad
  bool requires_grad = false;

  Tensor() = default;
  Tensor(int r, int c, bool rg = false) : rows(r), cols(c), requires_grad(rg) {
    require(r >= 0 && c >= 1, "tensor: bad shape ", r, " x ", c);
    data.assign(size_t(r) * size_t(c), T(0));
    if (rg) grad.assign(data.size(), T(0));
  }

  size_t numel() const { return data.size(); }
  std::vector<int> shape() const { return {rows, cols}; }

  T& at(int r, int c) { return data[size_t(r) * cols + c]; }
  const T& at(int r, int c) const { return data[size_t(r) * cols + c]; }
  T& gat(int r, int c) { return grad[size_t(r) * cols + c]; }

  void ensure_grad() {
    requires_grad = true;
    if (grad.size() != data.size()) grad.assign(data.size(), T(0));
  }
  void zero_grad() {
    if (requires_grad) grad.assign(data.size(), T(0));
  }
};

template <typename T>
using TensorPtr = std::shared_ptr<Tensor<T>>;

template <typename T>
TensorPtr<T> make_tensor(int rows, int cols, bool requires_grad = false) {
  return std::make_shared<Tensor<T>>(rows, cols, requires_grad);
}

template <typename T>
std::string shape_str(const Tensor<T>& t) {
  return msg(t.rows, "x", t.cols);
}

}  // namespace asa
