#include "stempush/nn/layers.hpp"

#include <cmath>

namespace stempush::nn {
namespace {

double glorot_span(int fan_in, int fan_out) {
  return std::sqrt(6.0 / (fan_in + fan_out));
}

void check4(const Tensor& x, const char* who) {
  if (x.shape.size() != 4) throw ValidationError(std::string(who) + ": tensor must be NCHW");
}

Tensor slice_channels(const Tensor& x, int c0, int c1) {
  const int n = x.dim(0), h = x.dim(2), w = x.dim(3);
  Tensor out({n, c1 - c0, h, w});
  for (int ni = 0; ni < n; ++ni)
    for (int c = c0; c < c1; ++c)
      for (int y = 0; y < h; ++y)
        for (int xx = 0; xx < w; ++xx) out.at4(ni, c - c0, y, xx) = x.at4(ni, c, y, xx);
  return out;
}

}  // namespace

bool same_shape(const Tensor& a, const Tensor& b) { return a.shape == b.shape; }

std::string shape_str(const std::vector<int>& s) {
  std::string out = "(";
  for (size_t i = 0; i < s.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(s[i]);
  }
  return out + ")";
}

Dense::Dense(int in_, int out_, Rng& rng) : in(in_), out(out_) {
  W = Tensor({out, in});
  b = Tensor({out});
  dW = Tensor({out, in});
  db = Tensor({out});
  const double s = glorot_span(in, out);
  for (auto& v : W.data) v = rng.uniform(-s, s);
}

Tensor Dense::forward(const Tensor& x) const {
  if (x.shape.size() != 2 || x.dim(1) != in) {
    throw ValidationError("dense: input shape " + shape_str(x.shape) + " does not match in=" +
                          std::to_string(in));
  }
  const int n = x.dim(0);
  Tensor y({n, out});
  for (int ni = 0; ni < n; ++ni) {
    for (int o = 0; o < out; ++o) {
      double acc = b.data[static_cast<size_t>(o)];
      const double* wrow = &W.data[static_cast<size_t>(o) * in];
      const double* xrow = &x.data[static_cast<size_t>(ni) * in];
      for (int i = 0; i < in; ++i) acc += wrow[i] * xrow[i];
      y.at2(ni, o) = acc;
    }
  }
  return y;
}

Tensor Dense::backward(const Tensor& x, const Tensor& dy) {
  const int n = x.dim(0);
  Tensor dx({n, in});
  for (int ni = 0; ni < n; ++ni) {
    const double* xrow = &x.data[static_cast<size_t>(ni) * in];
    double* dxrow = &dx.data[static_cast<size_t>(ni) * in];
    for (int o = 0; o < out; ++o) {
      const double g = dy.at2(ni, o);
      db.data[static_cast<size_t>(o)] += g;
      const double* wrow = &W.data[static_cast<size_t>(o) * in];
      double* dwrow = &dW.data[static_cast<size_t>(o) * in];
      for (int i = 0; i < in; ++i) {
        dwrow[i] += g * xrow[i];
        dxrow[i] += g * wrow[i];
      }
    }
  }
  return dx;
}

void Dense::collect(std::vector<ParamRef>& refs, const std::string& prefix) {
  refs.push_back({prefix + ".W", &W, &dW});
  refs.push_back({prefix + ".b", &b, &db});
}

void Dense::zero_grad() {
  dW.zero();
  db.zero();
}

Conv2d::Conv2d(int in_c_, int out_c_, int k_, int stride_, int pad_, Rng& rng)
    : in_c(in_c_), out_c(out_c_), k(k_), stride(stride_), pad(pad_) {
  W = Tensor({out_c, in_c, k, k});
  b = Tensor({out_c});
  dW = Tensor({out_c, in_c, k, k});
  db = Tensor({out_c});
  const double s = glorot_span(in_c * k * k, out_c * k * k);
  for (auto& v : W.data) v = rng.uniform(-s, s);
}

Tensor Conv2d::forward(const Tensor& x) const {
  check4(x, "conv2d");
  if (x.dim(1) != in_c) throw ValidationError("conv2d: channel mismatch");
  const int n = x.dim(0), h = x.dim(2), w = x.dim(3);
  const int oh = (h + 2 * pad - k) / stride + 1;
  const int ow = (w + 2 * pad - k) / stride + 1;
  Tensor y({n, out_c, oh, ow});
  for (int ni = 0; ni < n; ++ni) {
    for (int oc = 0; oc < out_c; ++oc) {
      for (int yy = 0; yy < oh; ++yy) {
        for (int xx = 0; xx < ow; ++xx) {
          double acc = b.data[static_cast<size_t>(oc)];
          for (int ic = 0; ic < in_c; ++ic) {
            for (int kh = 0; kh < k; ++kh) {
              const int ih = yy * stride - pad + kh;
              if (ih < 0 || ih >= h) continue;
              for (int kw = 0; kw < k; ++kw) {
                const int iw = xx * stride - pad + kw;
                if (iw < 0 || iw >= w) continue;
                acc += W.at4(oc, ic, kh, kw) * x.at4(ni, ic, ih, iw);
              }
            }
          }
          y.at4(ni, oc, yy, xx) = acc;
        }
      }
    }
  }
  return y;
}

Tensor Conv2d::backward(const Tensor& x, const Tensor& dy) {
  const int n = x.dim(0), h = x.dim(2), w = x.dim(3);
  const int oh = dy.dim(2), ow = dy.dim(3);
  Tensor dx(x.shape);
  for (int ni = 0; ni < n; ++ni) {
    for (int oc = 0; oc < out_c; ++oc) {
      for (int yy = 0; yy < oh; ++yy) {
        for (int xx = 0; xx < ow; ++xx) {
          const double g = dy.at4(ni, oc, yy, xx);
          if (g == 0.0) continue;
          db.data[static_cast<size_t>(oc)] += g;
          for (int ic = 0; ic < in_c; ++ic) {
            for (int kh = 0; kh < k; ++kh) {
              const int ih = yy * stride - pad + kh;
              if (ih < 0 || ih >= h) continue;
              for (int kw = 0; kw < k; ++kw) {
                const int iw = xx * stride - pad + kw;
                if (iw < 0 || iw >= w) continue;
                dW.at4(oc, ic, kh, kw) += g * x.at4(ni, ic, ih, iw);
                dx.at4(ni, ic, ih, iw) += g * W.at4(oc, ic, kh, kw);
              }
            }
          }
        }
      }
    }
  }
  return dx;
}

void Conv2d::collect(std::vector<ParamRef>& refs, const std::string& prefix) {
  refs.push_back({prefix + ".W", &W, &dW});
  refs.push_back({prefix + ".b", &b, &db});
}

void Conv2d::zero_grad() {
  dW.zero();
  db.zero();
}

Tensor relu(const Tensor& x) {
  Tensor y = x;
  for (auto& v : y.data) v = v > 0.0 ? v : 0.0;
  return y;
}

Tensor relu_backward(const Tensor& x, const Tensor& dy) {
  Tensor dx = dy;
  for (size_t i = 0; i < dx.data.size(); ++i) {
    if (x.data[i] <= 0.0) dx.data[i] = 0.0;
  }
  return dx;
}

Tensor tanh_fwd(const Tensor& x) {
  Tensor y = x;
  for (auto& v : y.data) v = std::tanh(v);
  return y;
}

Tensor tanh_backward(const Tensor& y, const Tensor& dy) {
  Tensor dx = dy;
  for (size_t i = 0; i < dx.data.size(); ++i) dx.data[i] *= 1.0 - y.data[i] * y.data[i];
  return dx;
}

Tensor sigmoid_fwd(const Tensor& x) {
  Tensor y = x;
  for (auto& v : y.data) v = 1.0 / (1.0 + std::exp(-v));
  return y;
}

Tensor sigmoid_backward(const Tensor& y, const Tensor& dy) {
  Tensor dx = dy;
  for (size_t i = 0; i < dx.data.size(); ++i) dx.data[i] *= y.data[i] * (1.0 - y.data[i]);
  return dx;
}

Tensor MaxPool2::forward(const Tensor& x, Tensor* argmax) const {
  check4(x, "maxpool2");
  const int n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  if (h % 2 != 0 || w % 2 != 0) throw ValidationError("maxpool2: odd spatial size");
  Tensor y({n, c, h / 2, w / 2});
  if (argmax) *argmax = Tensor({n, c, h / 2, w / 2});
  for (int ni = 0; ni < n; ++ni) {
    for (int ci = 0; ci < c; ++ci) {
      for (int yy = 0; yy < h / 2; ++yy) {
        for (int xx = 0; xx < w / 2; ++xx) {
          double best = -1e300;
          int64_t best_idx = 0;
          for (int dy2 = 0; dy2 < 2; ++dy2) {
            for (int dx2 = 0; dx2 < 2; ++dx2) {
              const int iy = 2 * yy + dy2, ix = 2 * xx + dx2;
              const double v = x.at4(ni, ci, iy, ix);
              if (v > best) {
                best = v;
                best_idx = ((static_cast<int64_t>(ni) * c + ci) * h + iy) * w + ix;
              }
            }
          }
          y.at4(ni, ci, yy, xx) = best;
          if (argmax) argmax->at4(ni, ci, yy, xx) = static_cast<double>(best_idx);
        }
      }
    }
  }
  return y;
}

Tensor MaxPool2::backward(const Tensor& argmax, const Tensor& dy,
                          const std::vector<int>& x_shape) const {
  Tensor dx(x_shape);
  for (size_t i = 0; i < dy.data.size(); ++i) {
    dx.data[static_cast<size_t>(argmax.data[i])] += dy.data[i];
  }
  return dx;
}

Tensor Upsample2::forward(const Tensor& x) const {
  check4(x, "upsample2");
  const int n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  Tensor y({n, c, 2 * h, 2 * w});
  for (int ni = 0; ni < n; ++ni)
    for (int ci = 0; ci < c; ++ci)
      for (int yy = 0; yy < 2 * h; ++yy)
        for (int xx = 0; xx < 2 * w; ++xx) y.at4(ni, ci, yy, xx) = x.at4(ni, ci, yy / 2, xx / 2);
  return y;
}

Tensor Upsample2::backward(const Tensor& dy) const {
  const int n = dy.dim(0), c = dy.dim(1), h = dy.dim(2) / 2, w = dy.dim(3) / 2;
  Tensor dx({n, c, h, w});
  for (int ni = 0; ni < n; ++ni)
    for (int ci = 0; ci < c; ++ci)
      for (int yy = 0; yy < 2 * h; ++yy)
        for (int xx = 0; xx < 2 * w; ++xx) dx.at4(ni, ci, yy / 2, xx / 2) += dy.at4(ni, ci, yy, xx);
  return dx;
}

Tensor concat_channels(const Tensor& a, const Tensor& b) {
  check4(a, "concat");
  check4(b, "concat");
  const int n = a.dim(0), h = a.dim(2), w = a.dim(3);
  if (b.dim(0) != n || b.dim(2) != h || b.dim(3) != w) {
    throw ValidationError("concat_channels: spatial/batch mismatch");
  }
  Tensor out({n, a.dim(1) + b.dim(1), h, w});
  for (int ni = 0; ni < n; ++ni) {
    for (int c = 0; c < a.dim(1); ++c)
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) out.at4(ni, c, y, x) = a.at4(ni, c, y, x);
    for (int c = 0; c < b.dim(1); ++c)
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) out.at4(ni, a.dim(1) + c, y, x) = b.at4(ni, c, y, x);
  }
  return out;
}

std::pair<Tensor, Tensor> split_channels(const Tensor& x, int c_first) {
  return {slice_channels(x, 0, c_first), slice_channels(x, c_first, x.dim(1))};
}

ConvLstmCell::ConvLstmCell(int in_c_, int hid_c_, Rng& rng)
    : in_c(in_c_), hid_c(hid_c_), gates(in_c_ + hid_c_, 4 * hid_c_, 3, 1, 1, rng) {
  // Forget-gate bias starts at 1 so memory persists early in training.
  for (int c = hid_c; c < 2 * hid_c; ++c) gates.b.data[static_cast<size_t>(c)] = 1.0;
}

ConvLstmCell::State ConvLstmCell::initial(int n, int h, int w) const {
  return State{Tensor({n, hid_c, h, w}), Tensor({n, hid_c, h, w})};
}

ConvLstmCell::State ConvLstmCell::forward(const Tensor& x, const State& prev, Cache* cache) const {
  Tensor xh = concat_channels(x, prev.h);
  Tensor pre = gates.forward(xh);
  Tensor i = sigmoid_fwd(slice_channels(pre, 0, hid_c));
  Tensor f = sigmoid_fwd(slice_channels(pre, hid_c, 2 * hid_c));
  Tensor g = tanh_fwd(slice_channels(pre, 2 * hid_c, 3 * hid_c));
  Tensor o = sigmoid_fwd(slice_channels(pre, 3 * hid_c, 4 * hid_c));

  Tensor c_new = prev.c;
  for (size_t idx = 0; idx < c_new.data.size(); ++idx) {
    c_new.data[idx] = f.data[idx] * prev.c.data[idx] + i.data[idx] * g.data[idx];
  }
  Tensor tc = tanh_fwd(c_new);
  Tensor h_new = tc;
  for (size_t idx = 0; idx < h_new.data.size(); ++idx) h_new.data[idx] *= o.data[idx];

  if (cache) {
    cache->xh = std::move(xh);
    cache->i = std::move(i);
    cache->f = std::move(f);
    cache->g = std::move(g);
    cache->o = std::move(o);
    cache->c_prev = prev.c;
    cache->c_new = c_new;
    cache->tc = tc;
  }
  return State{std::move(h_new), std::move(c_new)};
}

ConvLstmCell::BackGrads ConvLstmCell::backward(const Cache& cache, const Tensor& dh,
                                               const Tensor& dc) {
  const int n = dh.dim(0), h = dh.dim(2), w = dh.dim(3);
  Tensor dgates({n, 4 * hid_c, h, w});
  Tensor dc_prev(dh.shape);

  for (int ni = 0; ni < n; ++ni) {
    for (int c = 0; c < hid_c; ++c) {
      for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
          const double dh_v = dh.at4(ni, c, y, x);
          const double i_v = cache.i.at4(ni, c, y, x);
          const double f_v = cache.f.at4(ni, c, y, x);
          const double g_v = cache.g.at4(ni, c, y, x);
          const double o_v = cache.o.at4(ni, c, y, x);
          const double tc_v = cache.tc.at4(ni, c, y, x);
          const double dct = dc.at4(ni, c, y, x) + dh_v * o_v * (1.0 - tc_v * tc_v);
          dgates.at4(ni, c, y, x) = dct * g_v * i_v * (1.0 - i_v);
          dgates.at4(ni, hid_c + c, y, x) =
              dct * cache.c_prev.at4(ni, c, y, x) * f_v * (1.0 - f_v);
          dgates.at4(ni, 2 * hid_c + c, y, x) = dct * i_v * (1.0 - g_v * g_v);
          dgates.at4(ni, 3 * hid_c + c, y, x) = dh_v * tc_v * o_v * (1.0 - o_v);
          dc_prev.at4(ni, c, y, x) = dct * f_v;
        }
      }
    }
  }

  Tensor dxh = gates.backward(cache.xh, dgates);
  auto [dx, dh_prev] = split_channels(dxh, in_c);
  return BackGrads{std::move(dx), State{std::move(dh_prev), std::move(dc_prev)}};
}

void ConvLstmCell::collect(std::vector<ParamRef>& refs, const std::string& prefix) {
  gates.collect(refs, prefix + ".gates");
}

void ConvLstmCell::zero_grad() { gates.zero_grad(); }

}  // namespace stempush::nn
