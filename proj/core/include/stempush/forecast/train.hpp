#pragma once

#include "stempush/forecast/image_tfm.hpp"
#include "stempush/forecast/state_tfm.hpp"
#include "stempush/rollout_log.hpp"

#include <vector>

namespace stempush::forecast {

// One supervised example: context + horizon slices of a logged rollout, kept
// only where the stem stayed measurable for the whole window.
struct PushWindow {
  std::vector<double> s;             // context + horizon measured locations
  std::vector<Vec6> poses;           // matching end-effector poses
  std::vector<TactileFrame> frames;  // matching images when the log kept them
  int source = 0;                    // index of the originating rollout
};

// Slides a window of context+horizon frames over each log with the given
// stride. need_frames requires retained images; need_measured drops windows
// containing any unmeasured frame (the image trainer turns it off because
// pixel losses need no location labels — unmeasured entries get s = -1).
std::vector<PushWindow> extract_windows(const std::vector<RolloutLog>& logs, int context,
                                        int horizon, int stride, bool need_frames,
                                        bool need_measured = true);

// Per-dimension scale (first 6) and offset (last 6) for encode_action /
// encode_state_input. Translation dims: std of deltas relative to each
// window's last context pose, offset 0. Orientation dims: mean and std of the
// absolute values. Scales are floored to keep the encoding well conditioned.
nn::Tensor fit_action_norm(const std::vector<PushWindow>& windows, int context);

struct TfmTrainConfig {
  int epochs = 200;
  int batch = 32;
  double lr = 0.02;
  double momentum = 0.9;
  double val_fraction = 0.2;
  int window_stride = 5;
  double teacher_forcing_fraction = 1.0 / 3.0;  // image backend only
  int max_windows = 0;                          // 0 = no cap (image backend caps)
  uint64_t seed = 1;
};

TfmTrainConfig state_train_config_from_config(const Config& cfg);
TfmTrainConfig image_train_config_from_config(const Config& cfg);

struct TfmTrainReport {
  // Per-epoch training loss. State backend: epoch-mean minibatch MSE. Image
  // backend: teacher-forced horizon pixel MSE, so the curve is comparable
  // across the scheduled-sampling ramp.
  std::vector<double> train_loss;
  // Held-out score and its repeat-last-context baseline. State backend:
  // horizon-mean |location error|. Image backend: horizon pixel MSE.
  double val_mae = 0.0;
  double persistence_mae = 0.0;
  int train_windows = 0;
  int val_windows = 0;
};

// Both trainers split train/validation by source rollout (held-out tasks, not
// held-out windows) and throw on a non-finite loss, quoting the last finite
// value. Windows must come from at least two rollouts.
StateTfm train_state_tfm(const std::vector<RolloutLog>& logs, const StateTfmConfig& cfg,
                         const TfmTrainConfig& train, TfmTrainReport* report = nullptr);

ImageTfm train_image_tfm(const std::vector<RolloutLog>& logs, const ImageTfmConfig& cfg,
                         const TfmTrainConfig& train, TfmTrainReport* report = nullptr);

// Horizon-mean absolute location error of a predictor across windows, plus the
// persistence baseline on exactly the same windows.
struct ForecastEval {
  double mae = 0.0;
  double persistence_mae = 0.0;
  int windows = 0;
};
ForecastEval evaluate_forecasts(Predictor& predictor, const std::vector<PushWindow>& windows,
                                int context, int horizon);

// Mean squared pixel error of the image model's horizon predictions.
double image_horizon_mse(const ImageTfm& model, const std::vector<PushWindow>& windows);

}  // namespace stempush::forecast
