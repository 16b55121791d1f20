#pragma once

#include "stempush/nn/tensor.hpp"

#include <map>

namespace stempush::nn {

// SGD with classical momentum: v = mu*v - lr*g; p += v.
// Velocity is keyed by parameter name; iteration follows the given parameter
// order, so updates are deterministic.
struct Sgd {
  double lr = 0.01;
  double momentum = 0.9;
  std::map<std::string, Tensor> velocity;

  void step(const std::vector<ParamRef>& params);
};

void zero_grads(const std::vector<ParamRef>& params);
double grad_norm(const std::vector<ParamRef>& params);
void clip_grads(const std::vector<ParamRef>& params, double max_norm);

}  // namespace stempush::nn
