#include "stempush/nn/grad_check.hpp"

#include "stempush/nn/optimizer.hpp"

#include <algorithm>
#include <cmath>

namespace stempush::nn {

double grad_check(const std::function<double()>& loss_with_backward,
                  const std::vector<ParamRef>& params, double h, double floor) {
  zero_grads(params);
  loss_with_backward();
  std::vector<Tensor> analytic;
  analytic.reserve(params.size());
  for (const auto& p : params) analytic.push_back(*p.grad);

  double max_rel = 0.0;
  for (size_t pi = 0; pi < params.size(); ++pi) {
    Tensor& value = *params[pi].value;
    for (size_t i = 0; i < value.data.size(); ++i) {
      const double orig = value.data[i];
      value.data[i] = orig + h;
      zero_grads(params);
      const double lp = loss_with_backward();
      value.data[i] = orig - h;
      zero_grads(params);
      const double lm = loss_with_backward();
      value.data[i] = orig;
      const double numeric = (lp - lm) / (2.0 * h);
      const double a = analytic[pi].data[i];
      const double rel = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), floor});
      max_rel = std::max(max_rel, rel);
    }
  }
  return max_rel;
}

}  // namespace stempush::nn
