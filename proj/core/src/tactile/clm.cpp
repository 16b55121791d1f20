#include "stempush/tactile/clm.hpp"

#include "stempush/nn/checkpoint.hpp"
#include "stempush/nn/optimizer.hpp"
#include "stempush/strfmt.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

namespace stempush::tactile {

void ClmConfig::validate() const {
  if (resolution < 16 || resolution % 4 != 0)
    throw ValidationError("clm: resolution must be a multiple of 4 and at least 16");
  if (conv1_channels <= 0 || conv2_channels <= 0 || dense1 <= 0 || dense2 <= 0)
    throw ValidationError("clm: layer widths must be positive");
}

ClmConfig clm_config_from_config(const Config& cfg) {
  ClmConfig c;
  c.resolution = static_cast<int>(cfg.integer("tactile.resolution"));
  c.conv1_channels = static_cast<int>(cfg.integer("tactile.clm.conv1_channels"));
  c.conv2_channels = static_cast<int>(cfg.integer("tactile.clm.conv2_channels"));
  c.dense1 = static_cast<int>(cfg.integer("tactile.clm.dense1"));
  c.dense2 = static_cast<int>(cfg.integer("tactile.clm.dense2"));
  c.validate();
  return c;
}

namespace {

int flat_features(const ClmConfig& cfg) {
  const int side = cfg.resolution / 4;  // two stride-2 stages
  return cfg.conv2_channels * side * side;
}

nn::Tensor reshape2(const nn::Tensor& x, int n, int features) {
  nn::Tensor out = x;
  out.shape = {n, features};
  return out;
}

}  // namespace

ClmModel::ClmModel(const ClmConfig& cfg_, Rng& rng) : cfg(cfg_) {
  cfg.validate();
  c1 = nn::Conv2d(TactileFrame::kChannels, cfg.conv1_channels, 3, 2, 1, rng);
  c2 = nn::Conv2d(cfg.conv1_channels, cfg.conv2_channels, 3, 2, 1, rng);
  d1 = nn::Dense(flat_features(cfg), cfg.dense1, rng);
  d2 = nn::Dense(cfg.dense1, cfg.dense2, rng);
  d3 = nn::Dense(cfg.dense2, 1, rng);
}

int64_t ClmModel::param_count() const {
  return c1.param_count() + c2.param_count() + d1.W.size() + d1.b.size() + d2.W.size() +
         d2.b.size() + d3.W.size() + d3.b.size();
}

std::vector<nn::ParamRef> ClmModel::params() {
  std::vector<nn::ParamRef> refs;
  c1.collect(refs, "clm.c1");
  c2.collect(refs, "clm.c2");
  d1.collect(refs, "clm.d1");
  d2.collect(refs, "clm.d2");
  d3.collect(refs, "clm.d3");
  return refs;
}

nn::Tensor ClmModel::forward(const nn::Tensor& x, Cache* cache) const {
  if (x.shape.size() != 4 || x.dim(1) != TactileFrame::kChannels || x.dim(2) != cfg.resolution ||
      x.dim(3) != cfg.resolution)
    throw ValidationError("clm: input " + nn::shape_str(x.shape) + " does not match a " +
                          fmt_int(cfg.resolution) + "px model");
  const int n = x.dim(0);
  nn::Tensor a1 = c1.forward(x);
  nn::Tensor h1 = nn::relu(a1);
  nn::Tensor a2 = c2.forward(h1);
  nn::Tensor flat = reshape2(nn::relu(a2), n, flat_features(cfg));
  nn::Tensor a3 = d1.forward(flat);
  nn::Tensor h3 = nn::relu(a3);
  nn::Tensor a4 = d2.forward(h3);
  nn::Tensor h4 = nn::relu(a4);
  nn::Tensor y = d3.forward(h4);
  if (cache != nullptr) {
    cache->x = x;
    cache->a1 = std::move(a1);
    cache->h1 = std::move(h1);
    cache->a2 = std::move(a2);
    cache->flat = std::move(flat);
    cache->a3 = std::move(a3);
    cache->h3 = std::move(h3);
    cache->a4 = std::move(a4);
    cache->h4 = std::move(h4);
  }
  return y;
}

void ClmModel::backward(const Cache& cache, const nn::Tensor& dy) {
  const int n = cache.x.dim(0);
  nn::Tensor dh4 = d3.backward(cache.h4, dy);
  nn::Tensor da4 = nn::relu_backward(cache.a4, dh4);
  nn::Tensor dh3 = d2.backward(cache.h3, da4);
  nn::Tensor da3 = nn::relu_backward(cache.a3, dh3);
  nn::Tensor dflat = d1.backward(cache.flat, da3);
  const int side = cfg.resolution / 4;
  dflat.shape = {n, cfg.conv2_channels, side, side};
  nn::Tensor da2 = nn::relu_backward(cache.a2, dflat);
  nn::Tensor dh1 = c2.backward(cache.h1, da2);
  nn::Tensor da1 = nn::relu_backward(cache.a1, dh1);
  c1.backward(cache.x, da1);
}

nn::Tensor frames_to_tensor(const std::vector<const TactileFrame*>& frames) {
  if (frames.empty()) throw ValidationError("frames_to_tensor: empty batch");
  const int res = frames[0]->resolution;
  nn::Tensor x({static_cast<int>(frames.size()), TactileFrame::kChannels, res, res});
  for (size_t n = 0; n < frames.size(); ++n) {
    const TactileFrame& f = *frames[n];
    if (f.resolution != res) throw ValidationError("frames_to_tensor: mixed resolutions");
    // Location, not press depth, is the regression target, so the heat channel
    // is normalized per frame: a shallow press then carries the same signal
    // strength as a deep one. The floor keeps near-rest frames from blowing up.
    double heat_max = 0.0;
    for (int y = 0; y < res; ++y)
      for (int xx = 0; xx < res; ++xx)
        heat_max = std::max(heat_max, static_cast<double>(f.at(y, xx, 2)));
    const double heat_scale = 1.0 / std::max(heat_max, 0.1);
    for (int c = 0; c < TactileFrame::kChannels; ++c)
      for (int y = 0; y < res; ++y)
        for (int xx = 0; xx < res; ++xx) {
          const double v = static_cast<double>(f.at(y, xx, c));
          x.at4(static_cast<int>(n), c, y, xx) = (c == 2 ? v * heat_scale : v) - 0.5;
        }
  }
  return x;
}

double clm_predict(const ClmModel& model, const TactileFrame& frame) {
  if (frame.resolution != model.cfg.resolution)
    throw ValidationError("clm_predict: frame is " + fmt_int(frame.resolution) +
                          "px but the model expects " + fmt_int(model.cfg.resolution) + "px");
  const nn::Tensor y = model.forward(frames_to_tensor({&frame}));
  return std::clamp(y.data[0], 0.0, 1.0);
}

ClmTrainConfig clm_train_config_from_config(const Config& cfg) {
  ClmTrainConfig t;
  t.epochs = static_cast<int>(cfg.integer("tactile.clm.epochs"));
  t.batch = static_cast<int>(cfg.integer("tactile.clm.batch"));
  t.lr = cfg.num("tactile.clm.lr");
  t.momentum = cfg.num("tactile.clm.momentum");
  t.val_fraction = cfg.num("tactile.clm.val_fraction");
  t.seed = static_cast<uint64_t>(cfg.integer("seed"));
  return t;
}

namespace {

struct Split {
  std::vector<int> train, val;
  std::vector<double> val_labels;
};

Split split_by_location(const std::vector<ClmSample>& samples, double val_fraction, Rng& rng) {
  std::vector<double> labels;
  for (const ClmSample& s : samples) labels.push_back(s.u);
  std::sort(labels.begin(), labels.end());
  labels.erase(std::unique(labels.begin(), labels.end()), labels.end());

  std::vector<size_t> order(labels.size());
  std::iota(order.begin(), order.end(), 0);
  for (size_t i = order.size(); i > 1; --i)
    std::swap(order[i - 1], order[static_cast<size_t>(rng.uniform_int(0, static_cast<int>(i) - 1))]);

  const size_t n_val = std::max<size_t>(
      1, static_cast<size_t>(std::lround(val_fraction * static_cast<double>(labels.size()))));
  std::set<double> val_set;
  Split split;
  for (size_t i = 0; i < n_val && i < order.size() - 1; ++i) {
    val_set.insert(labels[order[i]]);
    split.val_labels.push_back(labels[order[i]]);
  }
  std::sort(split.val_labels.begin(), split.val_labels.end());
  for (size_t i = 0; i < samples.size(); ++i) {
    if (val_set.count(samples[i].u))
      split.val.push_back(static_cast<int>(i));
    else
      split.train.push_back(static_cast<int>(i));
  }
  return split;
}

}  // namespace

ClmModel train_clm(const std::vector<ClmSample>& samples, const ClmConfig& cfg,
                   const ClmTrainConfig& train, ClmTrainReport* report) {
  if (samples.size() < 50)
    throw ValidationError("train_clm: need at least 50 samples, got " +
                          fmt_int(static_cast<long long>(samples.size())));
  // Fewer than ~5 distinct locations cannot support a held-out-location score;
  // training still runs (degenerate fits are well defined), the split just
  // holds out nothing when only one location exists.
  for (const ClmSample& s : samples)
    if (s.frame.resolution != cfg.resolution)
      throw ValidationError("train_clm: sample resolution " + fmt_int(s.frame.resolution) +
                            " does not match the model's " + fmt_int(cfg.resolution));

  Rng rng(train.seed);
  Rng split_rng = rng.split(1);
  Rng init_rng = rng.split(2);
  Rng shuffle_rng = rng.split(3);

  const Split split = split_by_location(samples, train.val_fraction, split_rng);
  ClmModel model(cfg, init_rng);
  std::vector<nn::ParamRef> params = model.params();
  nn::Sgd opt{train.lr, train.momentum, {}};

  const auto batch_tensor = [&](const std::vector<int>& idx, size_t lo, size_t hi,
                                nn::Tensor* y_true) {
    std::vector<const TactileFrame*> frames;
    frames.reserve(hi - lo);
    *y_true = nn::Tensor({static_cast<int>(hi - lo), 1});
    for (size_t i = lo; i < hi; ++i) {
      frames.push_back(&samples[static_cast<size_t>(idx[i])].frame);
      y_true->data[i - lo] = samples[static_cast<size_t>(idx[i])].u;
    }
    return frames_to_tensor(frames);
  };

  const auto eval_split = [&](const std::vector<int>& idx, double* mae) {
    if (idx.empty()) return 0.0;
    double se = 0.0, ae = 0.0;
    for (size_t lo = 0; lo < idx.size(); lo += static_cast<size_t>(train.batch)) {
      const size_t hi = std::min(idx.size(), lo + static_cast<size_t>(train.batch));
      nn::Tensor y_true;
      const nn::Tensor x = batch_tensor(idx, lo, hi, &y_true);
      const nn::Tensor y = model.forward(x);
      for (size_t i = 0; i < y.data.size(); ++i) {
        const double err = y.data[i] - y_true.data[i];
        se += err * err;
        ae += std::abs(std::clamp(y.data[i], 0.0, 1.0) - y_true.data[i]);
      }
    }
    if (mae != nullptr) *mae = ae / static_cast<double>(idx.size());
    return se / static_cast<double>(idx.size());
  };

  std::vector<int> order = split.train;
  double last_finite = 0.0;
  for (int epoch = 0; epoch < train.epochs; ++epoch) {
    for (size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1],
                order[static_cast<size_t>(shuffle_rng.uniform_int(0, static_cast<int>(i) - 1))]);
    double epoch_se = 0.0;
    for (size_t lo = 0; lo < order.size(); lo += static_cast<size_t>(train.batch)) {
      const size_t hi = std::min(order.size(), lo + static_cast<size_t>(train.batch));
      nn::Tensor y_true;
      const nn::Tensor x = batch_tensor(order, lo, hi, &y_true);
      ClmModel::Cache cache;
      const nn::Tensor y = model.forward(x, &cache);
      nn::Tensor dy({static_cast<int>(hi - lo), 1});
      double batch_se = 0.0;
      for (size_t i = 0; i < y.data.size(); ++i) {
        const double err = y.data[i] - y_true.data[i];
        batch_se += err * err;
        dy.data[i] = 2.0 * err / static_cast<double>(y.data.size());
      }
      if (!std::isfinite(batch_se))
        throw std::runtime_error("train_clm: loss diverged to a non-finite value; last finite "
                                 "loss was " +
                                 fmt_double(last_finite));
      last_finite = batch_se / static_cast<double>(hi - lo);
      epoch_se += batch_se;
      nn::zero_grads(params);
      model.backward(cache, dy);
      opt.step(params);
    }
    if (report != nullptr) {
      report->train_loss.push_back(epoch_se / static_cast<double>(order.size()));
      report->val_loss.push_back(eval_split(split.val, nullptr));
    }
  }
  if (report != nullptr) {
    report->val_labels = split.val_labels;
    eval_split(split.val, &report->val_mae);
  }
  return model;
}

void save_clm(const std::string& path, uint64_t config_hash, ClmModel& model) {
  nn::save_checkpoint(path, config_hash, model.params());
}

ClmModel load_clm(const std::string& path, uint64_t config_hash, const ClmConfig& cfg) {
  Rng rng(0);
  ClmModel model(cfg, rng);
  nn::load_checkpoint(path, config_hash, model.params());
  return model;
}

}  // namespace stempush::tactile
