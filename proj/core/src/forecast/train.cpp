#include "stempush/forecast/train.hpp"

#include "stempush/nn/optimizer.hpp"
#include "stempush/strfmt.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

namespace stempush::forecast {

std::vector<PushWindow> extract_windows(const std::vector<RolloutLog>& logs, int context,
                                        int horizon, int stride, bool need_frames,
                                        bool need_measured) {
  if (context < 2 || horizon < 1) throw ValidationError("extract_windows: bad window shape");
  if (stride < 1) throw ValidationError("extract_windows: stride must be positive");
  const size_t span = static_cast<size_t>(context + horizon);

  std::vector<PushWindow> windows;
  for (size_t li = 0; li < logs.size(); ++li) {
    const RolloutLog& log = logs[li];
    if (need_frames && log.rendered.size() != log.frames.size()) continue;
    if (log.frames.size() < span) continue;
    for (size_t start = 0; start + span <= log.frames.size();
         start += static_cast<size_t>(stride)) {
      bool usable = true;
      for (size_t k = start; k < start + span && usable && need_measured; ++k)
        usable = log.frames[k].u_measured.has_value();
      if (!usable) continue;
      PushWindow w;
      w.source = static_cast<int>(li);
      w.s.reserve(span);
      w.poses.reserve(span);
      for (size_t k = start; k < start + span; ++k) {
        w.s.push_back(log.frames[k].u_measured.value_or(-1.0));
        w.poses.push_back(log.frames[k].ee_pose);
        if (need_frames) w.frames.push_back(log.rendered[k]);
      }
      windows.push_back(std::move(w));
    }
  }
  return windows;
}

nn::Tensor fit_action_norm(const std::vector<PushWindow>& windows, int context) {
  nn::Tensor norm({12});
  std::array<double, 6> sum{};
  std::array<double, 6> sq{};
  long long count = 0;
  for (const PushWindow& w : windows) {
    const Vec6& ref = w.poses[static_cast<size_t>(context - 1)];
    for (const Vec6& p : w.poses) {
      for (int d = 0; d < 6; ++d) {
        const double raw = d < 3 ? p[d] - ref[d] : p[d];
        sum[static_cast<size_t>(d)] += raw;
        sq[static_cast<size_t>(d)] += raw * raw;
      }
      ++count;
    }
  }
  const double n = static_cast<double>(std::max(1ll, count));
  for (int d = 0; d < 6; ++d) {
    // Translation deltas are centred by construction; orientation is centred
    // on its dataset mean so the encoder sees z-scores.
    const double mean = d < 3 ? 0.0 : sum[static_cast<size_t>(d)] / n;
    const double var = sq[static_cast<size_t>(d)] / n - mean * mean;
    norm.data[static_cast<size_t>(d)] = std::max(std::sqrt(std::max(var, 0.0)), 1e-6);
    norm.data[static_cast<size_t>(6 + d)] = mean;
  }
  return norm;
}

TfmTrainConfig state_train_config_from_config(const Config& cfg) {
  TfmTrainConfig t;
  t.epochs = static_cast<int>(cfg.integer("forecast.state_tfm.epochs"));
  t.batch = static_cast<int>(cfg.integer("forecast.state_tfm.batch"));
  t.lr = cfg.num("forecast.state_tfm.lr");
  t.momentum = cfg.num("forecast.state_tfm.momentum");
  t.val_fraction = cfg.num("forecast.val_fraction");
  t.window_stride = static_cast<int>(cfg.integer("forecast.window_stride"));
  t.seed = static_cast<uint64_t>(cfg.integer("seed"));
  return t;
}

TfmTrainConfig image_train_config_from_config(const Config& cfg) {
  TfmTrainConfig t;
  t.epochs = static_cast<int>(cfg.integer("forecast.image_tfm.epochs"));
  t.batch = static_cast<int>(cfg.integer("forecast.image_tfm.batch"));
  t.lr = cfg.num("forecast.image_tfm.lr");
  t.momentum = cfg.num("forecast.image_tfm.momentum");
  t.val_fraction = cfg.num("forecast.val_fraction");
  t.window_stride = static_cast<int>(cfg.integer("forecast.window_stride"));
  t.teacher_forcing_fraction = cfg.num("forecast.image_tfm.teacher_forcing_fraction");
  t.max_windows = static_cast<int>(cfg.integer("forecast.image_tfm.max_windows"));
  t.seed = static_cast<uint64_t>(cfg.integer("seed"));
  return t;
}

namespace {

struct WindowSplit {
  std::vector<int> train, val;
};

// Hold out whole rollouts so validation measures generalization to new pushes.
WindowSplit split_by_source(const std::vector<PushWindow>& windows, double val_fraction,
                            Rng& rng) {
  std::set<int> sources;
  for (const PushWindow& w : windows) sources.insert(w.source);
  if (sources.size() < 2)
    throw ValidationError("tfm training: need windows from at least 2 rollouts, got " +
                          fmt_int(static_cast<long long>(sources.size())));
  std::vector<int> order(sources.begin(), sources.end());
  for (size_t i = order.size(); i > 1; --i)
    std::swap(order[i - 1],
              order[static_cast<size_t>(rng.uniform_int(0, static_cast<int>(i) - 1))]);
  size_t n_val = std::max<size_t>(
      1, static_cast<size_t>(std::lround(val_fraction * static_cast<double>(order.size()))));
  n_val = std::min(n_val, order.size() - 1);
  const std::set<int> val_sources(order.begin(), order.begin() + static_cast<long>(n_val));

  WindowSplit split;
  for (size_t i = 0; i < windows.size(); ++i) {
    if (val_sources.count(windows[i].source))
      split.val.push_back(static_cast<int>(i));
    else
      split.train.push_back(static_cast<int>(i));
  }
  return split;
}

void shuffle_ints(std::vector<int>& v, Rng& rng) {
  for (size_t i = v.size(); i > 1; --i)
    std::swap(v[i - 1], v[static_cast<size_t>(rng.uniform_int(0, static_cast<int>(i) - 1))]);
}

double persistence_mae_on(const std::vector<PushWindow>& windows, const std::vector<int>& idx,
                          int context, int horizon) {
  if (idx.empty()) return 0.0;
  double ae = 0.0;
  for (const int i : idx) {
    const PushWindow& w = windows[static_cast<size_t>(i)];
    const double last = w.s[static_cast<size_t>(context - 1)];
    for (int k = 0; k < horizon; ++k)
      ae += std::abs(last - w.s[static_cast<size_t>(context + k)]);
  }
  return ae / (static_cast<double>(idx.size()) * horizon);
}

}  // namespace

StateTfm train_state_tfm(const std::vector<RolloutLog>& logs, const StateTfmConfig& cfg,
                         const TfmTrainConfig& train, TfmTrainReport* report) {
  cfg.validate();
  const std::vector<PushWindow> windows =
      extract_windows(logs, cfg.context, cfg.horizon, train.window_stride, false);
  if (windows.empty())
    throw ValidationError("state tfm training: the logs contain no usable windows");

  Rng rng(train.seed);
  Rng split_rng = rng.split(1);
  Rng init_rng = rng.split(2);
  Rng shuffle_rng = rng.split(3);
  const WindowSplit split = split_by_source(windows, train.val_fraction, split_rng);

  StateTfm model(cfg, init_rng);
  {
    std::vector<PushWindow> train_windows;
    for (const int i : split.train) train_windows.push_back(windows[static_cast<size_t>(i)]);
    model.action_norm = fit_action_norm(train_windows, cfg.context);
  }

  const auto encode_window = [&](const PushWindow& w) {
    const std::vector<double> s_ctx(w.s.begin(), w.s.begin() + cfg.context);
    const std::vector<Vec6> p_ctx(w.poses.begin(), w.poses.begin() + cfg.context);
    const std::vector<Vec6> planned(w.poses.begin() + cfg.context, w.poses.end());
    return encode_state_input(cfg, s_ctx, p_ctx, planned, model.action_norm);
  };

  // The network regresses changes relative to the last measured location.
  const auto batch_tensors = [&](const std::vector<int>& idx, size_t lo, size_t hi,
                                 nn::Tensor* y_true) {
    nn::Tensor x({static_cast<int>(hi - lo), cfg.input_dim()});
    *y_true = nn::Tensor({static_cast<int>(hi - lo), cfg.horizon});
    for (size_t i = lo; i < hi; ++i) {
      const PushWindow& w = windows[static_cast<size_t>(idx[i])];
      const nn::Tensor row = encode_window(w);
      std::copy(row.data.begin(), row.data.end(),
                x.data.begin() + static_cast<long>((i - lo) * static_cast<size_t>(cfg.input_dim())));
      const double anchor = w.s[static_cast<size_t>(cfg.context - 1)];
      for (int k = 0; k < cfg.horizon; ++k)
        y_true->at2(static_cast<int>(i - lo), k) =
            w.s[static_cast<size_t>(cfg.context + k)] - anchor;
    }
    return x;
  };

  std::vector<nn::ParamRef> params = model.trainable_params();
  nn::Sgd opt{train.lr, train.momentum, {}};
  std::vector<int> order = split.train;
  double last_finite = 0.0;
  for (int epoch = 0; epoch < train.epochs; ++epoch) {
    shuffle_ints(order, shuffle_rng);
    double epoch_se = 0.0;
    long long epoch_n = 0;
    for (size_t lo = 0; lo < order.size(); lo += static_cast<size_t>(train.batch)) {
      const size_t hi = std::min(order.size(), lo + static_cast<size_t>(train.batch));
      nn::Tensor y_true;
      const nn::Tensor x = batch_tensors(order, lo, hi, &y_true);
      StateTfm::Cache cache;
      const nn::Tensor y = model.forward(x, &cache);
      nn::Tensor dy(y.shape);
      double se = 0.0;
      for (size_t i = 0; i < y.data.size(); ++i) {
        const double err = y.data[i] - y_true.data[i];
        se += err * err;
        dy.data[i] = 2.0 * err / static_cast<double>(y.data.size());
      }
      if (!std::isfinite(se))
        throw std::runtime_error("state tfm training diverged; last finite loss was " +
                                 fmt_double(last_finite));
      last_finite = se / static_cast<double>(y.data.size());
      epoch_se += se;
      epoch_n += static_cast<long long>(y.data.size());
      nn::zero_grads(params);
      model.backward(cache, dy);
      opt.step(params);
    }
    if (report != nullptr)
      report->train_loss.push_back(epoch_se / static_cast<double>(std::max(1ll, epoch_n)));
  }

  if (report != nullptr) {
    report->train_windows = static_cast<int>(split.train.size());
    report->val_windows = static_cast<int>(split.val.size());
    double ae = 0.0;
    for (const int i : split.val) {
      const PushWindow& w = windows[static_cast<size_t>(i)];
      const std::vector<double> s_hat = predict_horizon(
          model, std::vector<double>(w.s.begin(), w.s.begin() + cfg.context),
          std::vector<Vec6>(w.poses.begin(), w.poses.begin() + cfg.context),
          std::vector<Vec6>(w.poses.begin() + cfg.context, w.poses.end()));
      for (int k = 0; k < cfg.horizon; ++k)
        ae += std::abs(s_hat[static_cast<size_t>(k)] - w.s[static_cast<size_t>(cfg.context + k)]);
    }
    report->val_mae =
        split.val.empty() ? 0.0 : ae / (static_cast<double>(split.val.size()) * cfg.horizon);
    report->persistence_mae = persistence_mae_on(windows, split.val, cfg.context, cfg.horizon);
  }
  return model;
}

ImageTfm train_image_tfm(const std::vector<RolloutLog>& logs, const ImageTfmConfig& cfg,
                         const TfmTrainConfig& train, TfmTrainReport* report) {
  cfg.validate();
  std::vector<PushWindow> windows =
      extract_windows(logs, cfg.context, cfg.horizon, train.window_stride, true,
                      /*need_measured=*/false);
  if (windows.empty())
    throw ValidationError("image tfm training: the logs contain no usable windows with frames");
  for (const PushWindow& w : windows)
    if (w.frames.front().resolution != cfg.resolution)
      throw ValidationError("image tfm training: frames are " +
                            fmt_int(w.frames.front().resolution) + "px but the model expects " +
                            fmt_int(cfg.resolution) + "px");

  Rng rng(train.seed);
  Rng split_rng = rng.split(1);
  Rng init_rng = rng.split(2);
  Rng shuffle_rng = rng.split(3);
  Rng sample_rng = rng.split(4);
  WindowSplit split = split_by_source(windows, train.val_fraction, split_rng);
  if (train.max_windows > 0 && static_cast<int>(split.train.size()) > train.max_windows) {
    shuffle_ints(split.train, shuffle_rng);
    split.train.resize(static_cast<size_t>(train.max_windows));
  }

  ImageTfm model(cfg, init_rng);
  {
    std::vector<PushWindow> train_windows;
    for (const int i : split.train) train_windows.push_back(windows[static_cast<size_t>(i)]);
    model.action_norm = fit_action_norm(train_windows, cfg.context);
  }

  const int span = cfg.context + cfg.horizon;
  const auto stack_frames = [&](const std::vector<int>& idx, size_t lo, size_t hi, int t) {
    nn::Tensor x({static_cast<int>(hi - lo), TactileFrame::kChannels, cfg.resolution,
                  cfg.resolution});
    for (size_t i = lo; i < hi; ++i) {
      const nn::Tensor one =
          frame_to_input(windows[static_cast<size_t>(idx[i])].frames[static_cast<size_t>(t)]);
      std::copy(one.data.begin(), one.data.end(),
                x.data.begin() + static_cast<long>((i - lo) * one.data.size()));
    }
    return x;
  };
  const auto stack_actions = [&](const std::vector<int>& idx, size_t lo, size_t hi, int t) {
    nn::Tensor a({static_cast<int>(hi - lo), 6});
    for (size_t i = lo; i < hi; ++i) {
      const PushWindow& w = windows[static_cast<size_t>(idx[i])];
      const nn::Tensor one = encode_action(w.poses[static_cast<size_t>(t)],
                                           w.poses[static_cast<size_t>(cfg.context - 1)],
                                           model.action_norm);
      std::copy(one.data.begin(), one.data.end(), a.data.begin() + static_cast<long>((i - lo) * 6));
    }
    return a;
  };

  std::vector<nn::ParamRef> params = model.trainable_params();
  nn::Sgd opt{train.lr, train.momentum, {}};
  const int tf_epochs =
      static_cast<int>(std::ceil(train.teacher_forcing_fraction * train.epochs));
  double last_finite = 0.0;

  // Per-epoch curve entry: teacher-forced horizon MSE on the training windows,
  // a fixed yardstick unaffected by the scheduled-sampling ramp.
  const auto teacher_forced_loss = [&](const std::vector<int>& idx) {
    double se = 0.0;
    long long px = 0;
    for (size_t lo = 0; lo < idx.size(); lo += static_cast<size_t>(train.batch)) {
      const size_t hi = std::min(idx.size(), lo + static_cast<size_t>(train.batch));
      ImageTfm::State state = model.initial(static_cast<int>(hi - lo));
      for (int t = 1; t < span; ++t) {
        const nn::Tensor pred = model.step(state, stack_frames(idx, lo, hi, t - 1),
                                           stack_actions(idx, lo, hi, t), nullptr);
        if (t < cfg.context) continue;
        const nn::Tensor x_true = stack_frames(idx, lo, hi, t);
        for (size_t i = 0; i < pred.data.size(); ++i) {
          const double err = pred.data[i] - x_true.data[i];
          se += err * err;
        }
        px += static_cast<long long>(pred.data.size());
      }
    }
    return se / static_cast<double>(std::max(1ll, px));
  };

  std::vector<int> order = split.train;
  for (int epoch = 0; epoch < train.epochs; ++epoch) {
    shuffle_ints(order, shuffle_rng);
    const double p_self =
        epoch < tf_epochs
            ? 0.0
            : (train.epochs - 1 <= tf_epochs
                   ? 1.0
                   : static_cast<double>(epoch - tf_epochs) / (train.epochs - 1 - tf_epochs));
    long long epoch_px = 0;

    for (size_t lo = 0; lo < order.size(); lo += static_cast<size_t>(train.batch)) {
      const size_t hi = std::min(order.size(), lo + static_cast<size_t>(train.batch));
      ImageTfm::State state = model.initial(static_cast<int>(hi - lo));
      std::vector<ImageTfm::StepCache> caches(static_cast<size_t>(span - 1));
      std::vector<nn::Tensor> preds(static_cast<size_t>(span));  // indexed by frame t
      std::vector<bool> self_fed(static_cast<size_t>(span), false);

      double batch_se = 0.0;
      for (int t = 1; t < span; ++t) {
        const bool feed_pred = t > cfg.context && p_self > 0.0 &&
                               sample_rng.uniform() < p_self;
        self_fed[static_cast<size_t>(t)] = feed_pred;
        const nn::Tensor x_prev = feed_pred ? preds[static_cast<size_t>(t - 1)]
                                            : stack_frames(order, lo, hi, t - 1);
        const nn::Tensor a = stack_actions(order, lo, hi, t);
        preds[static_cast<size_t>(t)] =
            model.step(state, x_prev, a, &caches[static_cast<size_t>(t - 1)]);
        if (t >= cfg.context) {
          const nn::Tensor x_true = stack_frames(order, lo, hi, t);
          const nn::Tensor& p = preds[static_cast<size_t>(t)];
          for (size_t i = 0; i < p.data.size(); ++i) {
            const double err = p.data[i] - x_true.data[i];
            batch_se += err * err;
          }
          epoch_px += static_cast<long long>(p.data.size());
        }
      }
      if (!std::isfinite(batch_se))
        throw std::runtime_error("image tfm training diverged; last finite loss was " +
                                 fmt_double(last_finite));

      // Backprop through time, chaining gradients through self-fed frames.
      nn::zero_grads(params);
      ImageTfm::State dstate = model.initial(static_cast<int>(hi - lo));  // zeros
      const double denom = static_cast<double>(cfg.horizon) *
                           static_cast<double>(preds[static_cast<size_t>(span - 1)].data.size());
      nn::Tensor carried;  // gradient on the frame fed into the step above
      for (int t = span - 1; t >= 1; --t) {
        nn::Tensor dxhat;
        if (t >= cfg.context) {
          const nn::Tensor x_true = stack_frames(order, lo, hi, t);
          const nn::Tensor& p = preds[static_cast<size_t>(t)];
          dxhat = nn::Tensor(p.shape);
          for (size_t i = 0; i < p.data.size(); ++i)
            dxhat.data[i] = 2.0 * (p.data[i] - x_true.data[i]) / denom;
        }
        if (carried.size() > 0) {
          if (dxhat.size() > 0)
            dxhat += carried;
          else
            dxhat = carried;
        }
        const nn::Tensor dx_prev =
            model.step_backward(caches[static_cast<size_t>(t - 1)], dxhat, dstate);
        if (self_fed[static_cast<size_t>(t)])
          carried = dx_prev;
        else
          carried = nn::Tensor();
      }
      nn::clip_grads(params, 5.0);
      opt.step(params);

      last_finite = batch_se / std::max(1.0, static_cast<double>(epoch_px));
    }
    if (report != nullptr) report->train_loss.push_back(teacher_forced_loss(split.train));
  }

  if (report != nullptr) {
    report->train_windows = static_cast<int>(split.train.size());
    report->val_windows = static_cast<int>(split.val.size());
    std::vector<PushWindow> val_windows;
    for (const int i : split.val) val_windows.push_back(windows[static_cast<size_t>(i)]);
    // Pixel-space scores for the image backend: the model's horizon MSE and
    // the repeat-last-frame baseline on the same windows.
    report->val_mae = image_horizon_mse(model, val_windows);
    double base_se = 0.0;
    long long base_n = 0;
    for (const PushWindow& w : val_windows) {
      const TactileFrame& last = w.frames[static_cast<size_t>(cfg.context - 1)];
      for (int k = 0; k < cfg.horizon; ++k) {
        const TactileFrame& truth = w.frames[static_cast<size_t>(cfg.context + k)];
        for (size_t i = 0; i < truth.pixels.size(); ++i) {
          const double err = static_cast<double>(last.pixels[i]) - truth.pixels[i];
          base_se += err * err;
        }
        base_n += static_cast<long long>(truth.pixels.size());
      }
    }
    report->persistence_mae = base_n > 0 ? base_se / static_cast<double>(base_n) : 0.0;
  }
  return model;
}

ForecastEval evaluate_forecasts(Predictor& predictor, const std::vector<PushWindow>& windows,
                                int context, int horizon) {
  ForecastEval eval;
  for (const PushWindow& w : windows) {
    PredictorInput in;
    in.s.assign(w.s.begin(), w.s.begin() + context);
    in.poses.assign(w.poses.begin(), w.poses.begin() + context);
    in.planned_poses.assign(w.poses.begin() + context, w.poses.end());
    in.planned_twists.assign(static_cast<size_t>(horizon), Vec6::Zero());
    if (!w.frames.empty())
      in.frames.assign(w.frames.begin(), w.frames.begin() + context);
    const ForecastResult result = predictor.predict(in);
    if (result.s_hat.size() != static_cast<size_t>(horizon))
      throw ValidationError("predictor '" + predictor.name() + "' returned " +
                            fmt_int(static_cast<long long>(result.s_hat.size())) +
                            " values for a horizon of " + fmt_int(horizon));
    const double last = w.s[static_cast<size_t>(context - 1)];
    for (int k = 0; k < horizon; ++k) {
      eval.mae += std::abs(result.s_hat[static_cast<size_t>(k)] -
                           w.s[static_cast<size_t>(context + k)]);
      eval.persistence_mae += std::abs(last - w.s[static_cast<size_t>(context + k)]);
    }
    ++eval.windows;
  }
  if (eval.windows > 0) {
    eval.mae /= static_cast<double>(eval.windows) * horizon;
    eval.persistence_mae /= static_cast<double>(eval.windows) * horizon;
  }
  return eval;
}

double image_horizon_mse(const ImageTfm& model, const std::vector<PushWindow>& windows) {
  double se = 0.0;
  long long n = 0;
  for (const PushWindow& w : windows) {
    const std::vector<TactileFrame> context(w.frames.begin(),
                                            w.frames.begin() + model.cfg.context);
    const std::vector<Vec6> poses(w.poses.begin(), w.poses.begin() + model.cfg.context);
    const std::vector<Vec6> planned(w.poses.begin() + model.cfg.context, w.poses.end());
    const std::vector<TactileFrame> preds = rollout_image_tfm(model, context, poses, planned);
    for (int k = 0; k < model.cfg.horizon; ++k) {
      const TactileFrame& truth = w.frames[static_cast<size_t>(model.cfg.context + k)];
      const TactileFrame& pred = preds[static_cast<size_t>(k)];
      for (size_t i = 0; i < truth.pixels.size(); ++i) {
        const double err = static_cast<double>(pred.pixels[i]) - truth.pixels[i];
        se += err * err;
      }
      n += static_cast<long long>(truth.pixels.size());
    }
  }
  return n > 0 ? se / static_cast<double>(n) : 0.0;
}

}  // namespace stempush::forecast
