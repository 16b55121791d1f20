#pragma once

#include "stempush/forecast/predictor.hpp"
#include "stempush/nn/layers.hpp"
#include "stempush/tactile/clm.hpp"

#include <memory>
#include <string>

namespace stempush::forecast {

struct ImageTfmConfig {
  int resolution = 32;
  int enc1_channels = 8;
  int enc2_channels = 12;
  int lstm_channels = 12;
  int context = 10;
  int horizon = 10;

  void validate() const;
};

ImageTfmConfig image_tfm_config_from_config(const Config& cfg);

// Action-conditioned video prediction: two conv+pool encoder stages, two
// convolutional LSTM layers with the action tiled onto the latent channels,
// two conv+upsample decoder stages, and a skip from the input image into a
// tanh output, mapped back to [0, 1]. The skip enters in pre-tanh space, so a
// zero decoder output reproduces the input frame: the network regresses the
// frame-to-frame change. One step consumes the previous frame and the action
// for the step being predicted; feeding predictions back in yields the
// autoregressive factorisation over a horizon.
struct ImageTfm {
  ImageTfmConfig cfg;
  nn::Conv2d e1, e2;        // encoder
  nn::ConvLstmCell r1, r2;  // recurrent core
  nn::Conv2d d1, d2, head;  // decoder
  nn::MaxPool2 pool;
  nn::Upsample2 up;
  nn::Tensor action_norm;  // (12) = per-dim scale then offset, fit on training data
  nn::Tensor norm_grad;    // unused slot so the normalization can ride in checkpoints

  ImageTfm() = default;
  ImageTfm(const ImageTfmConfig& cfg, Rng& rng);

  struct State {
    nn::ConvLstmCell::State s1, s2;
  };
  State initial(int n) const;

  struct StepCache {
    nn::Tensor x_prev, xin, a1, h1, am1, p1, a2, h2, am2, p2;
    nn::ConvLstmCell::Cache c1, c2;
    nn::Tensor u1, a3, h3, u2, a4, h4, y;
  };

  // x_prev: (N,3,R,R) in [0,1]; action: (N,6) as built by encode_action.
  // Advances the state and returns the predicted next frame, also in [0,1].
  nn::Tensor step(State& state, const nn::Tensor& x_prev, const nn::Tensor& action,
                  StepCache* cache) const;

  // Reverse of one step. dxhat is the loss gradient on this step's output
  // (pass an empty tensor when the output went unused); dstate carries the
  // recurrent gradients flowing back from later steps and is replaced with the
  // gradients for the previous state. Returns the gradient on x_prev.
  nn::Tensor step_backward(const StepCache& cache, const nn::Tensor& dxhat, State& dstate);

  std::vector<nn::ParamRef> trainable_params();
  std::vector<nn::ParamRef> checkpoint_params();
  int64_t param_count() const;
};

// Tensor conversions shared by training and inference.
nn::Tensor frame_to_input(const TactileFrame& frame);  // (1,3,R,R) in [0,1]
TactileFrame tensor_to_frame(const nn::Tensor& x, int n, double timestamp);
// Normalized (1,6) action: translation as deltas against the reference pose,
// orientation z-scored but absolute (a constant tool attitude sets the drift
// direction and would cancel out of a pure delta).
nn::Tensor encode_action(const Vec6& pose, const Vec6& reference, const nn::Tensor& action_norm);

// Runs context warmup on real frames, then rolls the model out over the
// horizon feeding its own predictions back. Returns the horizon frames.
std::vector<TactileFrame> rollout_image_tfm(const ImageTfm& model,
                                            const std::vector<TactileFrame>& context,
                                            const std::vector<Vec6>& poses,
                                            const std::vector<Vec6>& planned_poses);

class ImageTfmPredictor : public Predictor {
 public:
  ImageTfmPredictor(std::shared_ptr<const ImageTfm> model,
                    std::shared_ptr<const tactile::ClmModel> clm)
      : model_(std::move(model)), clm_(std::move(clm)) {}
  std::string name() const override { return "image"; }
  bool ready() const override { return model_ != nullptr && clm_ != nullptr; }
  ForecastResult predict(const PredictorInput& in) override;

 private:
  std::shared_ptr<const ImageTfm> model_;
  std::shared_ptr<const tactile::ClmModel> clm_;
};

void save_image_tfm(const std::string& path, uint64_t config_hash, ImageTfm& model);
ImageTfm load_image_tfm(const std::string& path, uint64_t config_hash, const ImageTfmConfig& cfg);

}  // namespace stempush::forecast
