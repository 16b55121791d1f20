#pragma once

#include "stempush/nn/tensor.hpp"
#include "stempush/rng.hpp"

#include <utility>

namespace stempush::nn {

// Layers keep parameters + gradient accumulators; forward is pure, backward
// takes whatever the caller cached and accumulates parameter gradients. This
// explicit-cache style is what lets the recurrent models run BPTT over long
// unrolls without a graph engine.

struct Dense {
  int in = 0, out = 0;
  Tensor W, b, dW, db;  // W: (out, in)

  Dense() = default;
  Dense(int in, int out, Rng& rng);
  Tensor forward(const Tensor& x) const;               // x: (N, in)
  Tensor backward(const Tensor& x, const Tensor& dy);  // returns dx
  void collect(std::vector<ParamRef>& refs, const std::string& prefix);
  void zero_grad();
};

struct Conv2d {
  int in_c = 0, out_c = 0, k = 3, stride = 1, pad = 1;
  Tensor W, b, dW, db;  // W: (out_c, in_c, k, k)

  Conv2d() = default;
  Conv2d(int in_c, int out_c, int k, int stride, int pad, Rng& rng);
  Tensor forward(const Tensor& x) const;  // x: (N, C, H, W)
  Tensor backward(const Tensor& x, const Tensor& dy);
  void collect(std::vector<ParamRef>& refs, const std::string& prefix);
  void zero_grad();
  int64_t param_count() const { return W.size() + b.size(); }
};

Tensor relu(const Tensor& x);
Tensor relu_backward(const Tensor& x, const Tensor& dy);
Tensor tanh_fwd(const Tensor& x);
Tensor tanh_backward(const Tensor& y, const Tensor& dy);     // y = tanh(x)
Tensor sigmoid_fwd(const Tensor& x);
Tensor sigmoid_backward(const Tensor& y, const Tensor& dy);  // y = sigmoid(x)

// 2x2 max pooling, stride 2. argmax caches the flat source index per output.
struct MaxPool2 {
  Tensor forward(const Tensor& x, Tensor* argmax) const;
  Tensor backward(const Tensor& argmax, const Tensor& dy, const std::vector<int>& x_shape) const;
};

// Nearest-neighbour 2x upsampling.
struct Upsample2 {
  Tensor forward(const Tensor& x) const;
  Tensor backward(const Tensor& dy) const;
};

Tensor concat_channels(const Tensor& a, const Tensor& b);
std::pair<Tensor, Tensor> split_channels(const Tensor& x, int c_first);

// Convolutional LSTM cell: gates = conv([x, h_prev]), gate order (i, f, g, o),
// c' = f*c + i*g, h' = o*tanh(c'). Forget-gate bias initialized to 1.
struct ConvLstmCell {
  int in_c = 0, hid_c = 0;
  Conv2d gates;

  struct State {
    Tensor h, c;
  };
  struct Cache {
    Tensor xh;  // conv input
    Tensor i, f, g, o, c_prev, c_new, tc;
  };
  struct BackGrads {
    Tensor dx;
    State dprev;
  };

  ConvLstmCell() = default;
  ConvLstmCell(int in_c, int hid_c, Rng& rng);
  State initial(int n, int h, int w) const;
  State forward(const Tensor& x, const State& prev, Cache* cache) const;
  BackGrads backward(const Cache& cache, const Tensor& dh, const Tensor& dc);
  void collect(std::vector<ParamRef>& refs, const std::string& prefix);
  void zero_grad();
};

}  // namespace stempush::nn
