#pragma once

#include "stempush/types.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace stempush::nn {

// Dense row-major tensor of doubles. Double precision keeps reverse-mode
// gradients within 1e-4 of central differences at h = 1e-5.
struct Tensor {
  std::vector<int> shape;
  std::vector<double> data;

  Tensor() = default;
  explicit Tensor(std::vector<int> s) : shape(std::move(s)) {
    data.assign(static_cast<size_t>(numel(shape)), 0.0);
  }

  static int64_t numel(const std::vector<int>& s) {
    int64_t n = 1;
    for (int d : s) n *= d;
    return n;
  }

  int64_t size() const { return static_cast<int64_t>(data.size()); }
  void zero() { std::fill(data.begin(), data.end(), 0.0); }

  int dim(int i) const { return shape[static_cast<size_t>(i)]; }

  double& at2(int r, int c) { return data[static_cast<size_t>(r) * shape[1] + c]; }
  double at2(int r, int c) const { return data[static_cast<size_t>(r) * shape[1] + c]; }

  double& at4(int n, int c, int h, int w) {
    return data[((static_cast<size_t>(n) * shape[1] + c) * shape[2] + h) * shape[3] + w];
  }
  double at4(int n, int c, int h, int w) const {
    return data[((static_cast<size_t>(n) * shape[1] + c) * shape[2] + h) * shape[3] + w];
  }

  Tensor& operator+=(const Tensor& o) {
    if (shape != o.shape) throw ValidationError("tensor shape mismatch in +=");
    for (size_t i = 0; i < data.size(); ++i) data[i] += o.data[i];
    return *this;
  }
};

bool same_shape(const Tensor& a, const Tensor& b);
std::string shape_str(const std::vector<int>& s);

// Named view of a parameter and its gradient slot.
struct ParamRef {
  std::string name;
  Tensor* value = nullptr;
  Tensor* grad = nullptr;
};

}  // namespace stempush::nn
