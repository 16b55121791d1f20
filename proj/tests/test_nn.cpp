#include <doctest.h>

#include "stempush/nn/checkpoint.hpp"
#include "stempush/nn/grad_check.hpp"
#include "stempush/nn/layers.hpp"
#include "stempush/nn/optimizer.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>

using namespace stempush;
using namespace stempush::nn;

namespace {

Tensor random_tensor(std::vector<int> shape, Rng& rng, double span = 1.0) {
  Tensor t(std::move(shape));
  for (auto& v : t.data) v = rng.uniform(-span, span);
  return t;
}

// 0.5 * sum(c_i * y_i^2) with fixed random weights; dy = c .* y.
struct WeightedLoss {
  Tensor c;
  explicit WeightedLoss(const std::vector<int>& shape, Rng& rng) : c(random_tensor(shape, rng)) {}
  double value(const Tensor& y) const {
    double l = 0.0;
    for (size_t i = 0; i < y.data.size(); ++i) l += 0.5 * c.data[i] * y.data[i] * y.data[i];
    return l;
  }
  Tensor grad(const Tensor& y) const {
    Tensor dy = y;
    for (size_t i = 0; i < dy.data.size(); ++i) dy.data[i] *= c.data[i];
    return dy;
  }
};

}  // namespace

TEST_CASE("dense layer gradients match central differences") {
  Rng rng(101);
  Dense layer(8, 4, rng);
  Tensor x = random_tensor({3, 8}, rng);
  Tensor dx_slot({3, 8});
  WeightedLoss loss({3, 4}, rng);

  std::vector<ParamRef> params;
  layer.collect(params, "dense");
  params.push_back({"x", &x, &dx_slot});

  const double err = grad_check(
      [&]() {
        const Tensor y = layer.forward(x);
        dx_slot += layer.backward(x, loss.grad(y));
        return loss.value(y);
      },
      params);
  CHECK(err < 1e-4);
}

TEST_CASE("conv2d gradients match central differences") {
  Rng rng(102);
  for (int stride : {1, 2}) {
    Conv2d layer(2, 3, 3, stride, 1, rng);
    Tensor x = random_tensor({2, 2, 8, 8}, rng);
    Tensor dx_slot(x.shape);
    const Tensor probe = layer.forward(x);
    WeightedLoss loss(probe.shape, rng);

    std::vector<ParamRef> params;
    layer.collect(params, "conv");
    params.push_back({"x", &x, &dx_slot});

    const double err = grad_check(
        [&]() {
          const Tensor y = layer.forward(x);
          dx_slot += layer.backward(x, loss.grad(y));
          return loss.value(y);
        },
        params);
    CHECK(err < 1e-4);
  }
}

TEST_CASE("identity map gradient error is zero up to rounding") {
  Rng rng(103);
  Tensor x = random_tensor({10}, rng);
  Tensor dx(x.shape);
  Tensor w = random_tensor({10}, rng);

  const double err = grad_check(
      [&]() {
        double l = 0.0;
        for (int i = 0; i < 10; ++i) {
          l += w.data[i] * x.data[i];
          dx.data[i] += w.data[i];
        }
        return l;
      },
      {{"x", &x, &dx}});
  CHECK(err < 1e-9);
}

TEST_CASE("activation gradients match central differences") {
  Rng rng(104);
  Tensor x = random_tensor({40}, rng, 2.0);
  Tensor dx(x.shape);
  WeightedLoss loss({40}, rng);

  SUBCASE("relu") {
    // Nudge values away from the kink where central differences are invalid.
    for (auto& v : x.data) {
      if (std::abs(v) < 1e-3) v = 0.1;
    }
    const double err = grad_check(
        [&]() {
          const Tensor y = relu(x);
          dx += relu_backward(x, loss.grad(y));
          return loss.value(y);
        },
        {{"x", &x, &dx}});
    CHECK(err < 1e-4);
  }
  SUBCASE("tanh") {
    const double err = grad_check(
        [&]() {
          const Tensor y = tanh_fwd(x);
          dx += tanh_backward(y, loss.grad(y));
          return loss.value(y);
        },
        {{"x", &x, &dx}});
    CHECK(err < 1e-4);
  }
  SUBCASE("sigmoid") {
    const double err = grad_check(
        [&]() {
          const Tensor y = sigmoid_fwd(x);
          dx += sigmoid_backward(y, loss.grad(y));
          return loss.value(y);
        },
        {{"x", &x, &dx}});
    CHECK(err < 1e-4);
  }
}

TEST_CASE("maxpool and upsample gradients match central differences") {
  Rng rng(105);
  Tensor x = random_tensor({1, 2, 6, 6}, rng);
  // Separate entries so the pooling argmax cannot flip under the probe step.
  for (size_t i = 0; i < x.data.size(); ++i) x.data[i] += 0.01 * static_cast<double>(i % 7);
  Tensor dx(x.shape);

  SUBCASE("maxpool2") {
    MaxPool2 pool;
    WeightedLoss loss({1, 2, 3, 3}, rng);
    const double err = grad_check(
        [&]() {
          Tensor argmax;
          const Tensor y = pool.forward(x, &argmax);
          dx += pool.backward(argmax, loss.grad(y), x.shape);
          return loss.value(y);
        },
        {{"x", &x, &dx}});
    CHECK(err < 1e-4);
  }
  SUBCASE("upsample2") {
    Upsample2 up;
    WeightedLoss loss({1, 2, 12, 12}, rng);
    const double err = grad_check(
        [&]() {
          const Tensor y = up.forward(x);
          dx += up.backward(loss.grad(y));
          return loss.value(y);
        },
        {{"x", &x, &dx}});
    CHECK(err < 1e-4);
  }
}

TEST_CASE("convlstm cell gradients match central differences through 3 steps") {
  Rng rng(106);
  ConvLstmCell cell(2, 2, rng);
  std::vector<Tensor> xs;
  for (int t = 0; t < 3; ++t) xs.push_back(random_tensor({1, 2, 4, 4}, rng));
  Tensor dx_unused({1, 2, 4, 4});
  WeightedLoss loss({1, 2, 4, 4}, rng);

  std::vector<ParamRef> params;
  cell.collect(params, "lstm");
  params.push_back({"x0", &xs[0], &dx_unused});

  const double err = grad_check(
      [&]() {
        ConvLstmCell::State state = cell.initial(1, 4, 4);
        std::vector<ConvLstmCell::Cache> caches(xs.size());
        for (size_t t = 0; t < xs.size(); ++t) state = cell.forward(xs[t], state, &caches[t]);
        const double l = loss.value(state.h);

        Tensor dh = loss.grad(state.h);
        Tensor dc(dh.shape);
        for (int t = static_cast<int>(xs.size()) - 1; t >= 0; --t) {
          auto grads = cell.backward(caches[static_cast<size_t>(t)], dh, dc);
          dh = std::move(grads.dprev.h);
          dc = std::move(grads.dprev.c);
          if (t == 0) dx_unused += grads.dx;
        }
        return l;
      },
      params);
  CHECK(err < 1e-4);
}

TEST_CASE("sgd with momentum descends a quadratic") {
  Tensor p({4});
  p.data = {1.0, -2.0, 3.0, -4.0};
  Tensor g({4});
  Sgd opt{0.1, 0.9, {}};
  std::vector<ParamRef> params = {{"p", &p, &g}};
  double loss = 1e300;
  for (int it = 0; it < 300; ++it) {
    loss = 0.0;
    for (int i = 0; i < 4; ++i) {
      loss += 0.5 * p.data[i] * p.data[i];
      g.data[i] = p.data[i];
    }
    opt.step(params);
    zero_grads(params);
  }
  // Heavy-ball iterates oscillate, so only the limit is checked.
  CHECK(loss < 1e-8);

  // First step with empty velocity must be plain gradient descent.
  Tensor q({1});
  q.data = {2.0};
  Tensor qg({1});
  qg.data = {0.5};
  Sgd opt2{0.1, 0.9, {}};
  std::vector<ParamRef> qp = {{"q", &q, &qg}};
  opt2.step(qp);
  CHECK(q.data[0] == doctest::Approx(2.0 - 0.1 * 0.5));
}

TEST_CASE("checkpoints round-trip and refuse mismatched config hashes") {
  Rng rng(107);
  Dense a(6, 3, rng), b(3, 2, rng);
  std::vector<ParamRef> params;
  a.collect(params, "a");
  b.collect(params, "b");

  const auto path = std::filesystem::temp_directory_path() / "stempush_ckpt_test.bin";
  save_checkpoint(path.string(), 0xABCDEF12u, params);

  Rng rng2(999);
  Dense a2(6, 3, rng2), b2(3, 2, rng2);
  std::vector<ParamRef> params2;
  a2.collect(params2, "a");
  b2.collect(params2, "b");
  load_checkpoint(path.string(), 0xABCDEF12u, params2);
  CHECK(a2.W.data == a.W.data);
  CHECK(b2.b.data == b.b.data);
  CHECK(checkpoint_config_hash(path.string()) == 0xABCDEF12u);

  CHECK_THROWS_AS(load_checkpoint(path.string(), 0x1234u, params2), ValidationError);

  std::vector<ParamRef> renamed = params2;
  renamed[0].name = "other";
  CHECK_THROWS_AS(load_checkpoint(path.string(), 0xABCDEF12u, renamed), ValidationError);
  std::filesystem::remove(path);
}
