#pragma once

#include "stempush/nn/tensor.hpp"

#include <functional>

namespace stempush::nn {

// Compares reverse-mode gradients against central finite differences.
// `loss_with_backward` must run a full forward pass, accumulate gradients into
// the ParamRef grad slots, and return the scalar loss; it is re-invoked with
// perturbed parameter values. Returns the maximum relative error
// |analytic - numeric| / max(|analytic|, |numeric|, floor).
double grad_check(const std::function<double()>& loss_with_backward,
                  const std::vector<ParamRef>& params, double h = 1e-5, double floor = 1e-2);

}  // namespace stempush::nn
