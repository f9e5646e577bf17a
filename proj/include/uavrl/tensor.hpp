#pragma once

#include <cstddef>
#include <initializer_list>
#include <string>
#include <vector>

#include "uavrl/errors.hpp"

namespace uavrl::ag {

// Dense rank-2 tensor of 64-bit reals, row-major. Scalars are (1,1), row
// vectors (1,n), column vectors (n,1). `node` ties the tensor to the tape
// that produced it (-1 = constant, no gradient flows).
struct Tensor {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;
  int node = -1;

  Tensor() = default;
  Tensor(int r, int c) : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, 0.0) {}
  Tensor(int r, int c, std::vector<double> values) : rows(r), cols(c), data(std::move(values)) {
    if (data.size() != static_cast<std::size_t>(r) * c) {
      throw ShapeError("tensor data length does not match shape");
    }
  }

  static Tensor zeros(int r, int c) { return Tensor(r, c); }
  static Tensor full(int r, int c, double v) {
    Tensor t(r, c);
    for (auto& x : t.data) x = v;
    return t;
  }
  static Tensor scalar(double v) { return Tensor(1, 1, {v}); }
  static Tensor row(std::vector<double> values) {
    const int n = static_cast<int>(values.size());
    return Tensor(1, n, std::move(values));
  }
  static Tensor column(std::vector<double> values) {
    const int n = static_cast<int>(values.size());
    return Tensor(n, 1, std::move(values));
  }
  static Tensor identity(int n) {
    Tensor t(n, n);
    for (int i = 0; i < n; ++i) t.data[static_cast<std::size_t>(i) * n + i] = 1.0;
    return t;
  }

  int size() const { return rows * cols; }
  double& at(int r, int c) { return data[static_cast<std::size_t>(r) * cols + c]; }
  double at(int r, int c) const { return data[static_cast<std::size_t>(r) * cols + c]; }
  double item() const {
    if (size() != 1) throw ShapeError("item() requires a single-element tensor");
    return data[0];
  }

  std::string shape_str() const {
    return "(" + std::to_string(rows) + "," + std::to_string(cols) + ")";
  }
};

}  // namespace uavrl::ag
