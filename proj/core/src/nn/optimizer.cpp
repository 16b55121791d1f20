#include "stempush/nn/optimizer.hpp"

#include <cmath>

namespace stempush::nn {

void Sgd::step(const std::vector<ParamRef>& params) {
  for (const auto& p : params) {
    auto it = velocity.find(p.name);
    if (it == velocity.end()) {
      it = velocity.emplace(p.name, Tensor(p.value->shape)).first;
    }
    Tensor& v = it->second;
    for (size_t i = 0; i < v.data.size(); ++i) {
      v.data[i] = momentum * v.data[i] - lr * p.grad->data[i];
      p.value->data[i] += v.data[i];
    }
  }
}

void zero_grads(const std::vector<ParamRef>& params) {
  for (const auto& p : params) p.grad->zero();
}

double grad_norm(const std::vector<ParamRef>& params) {
  double s = 0.0;
  for (const auto& p : params) {
    for (double g : p.grad->data) s += g * g;
  }
  return std::sqrt(s);
}

void clip_grads(const std::vector<ParamRef>& params, double max_norm) {
  const double n = grad_norm(params);
  if (n <= max_norm || n == 0.0) return;
  const double scale = max_norm / n;
  for (const auto& p : params) {
    for (double& g : p.grad->data) g *= scale;
  }
}

}  // namespace stempush::nn
