#pragma once

#include "stempush/forecast/predictor.hpp"
#include "stempush/nn/layers.hpp"

#include <memory>
#include <string>

namespace stempush::forecast {

struct StateTfmConfig {
  int context = 10;
  int horizon = 10;
  int hidden1 = 64;
  int hidden2 = 64;

  // s values plus pose deltas for context and planned frames.
  int input_dim() const { return context + 6 * context + 6 * horizon; }
  void validate() const;
};

StateTfmConfig state_tfm_config_from_config(const Config& cfg);

// Direct state-space forward model: one dense network maps the measured
// location history and the action sequence to the horizon locations. The
// network's raw outputs are changes relative to the last measured location
// (so holding still is the all-zero function, not an identity the net must
// learn); predict_horizon adds the anchor back and clamps. Translation enters
// as per-dimension-normalized deltas relative to the last context pose (no
// absolute workspace coordinates); orientation enters z-scored but absolute,
// because a constant tool attitude decides which way the contact drifts and
// would vanish from pure deltas.
struct StateTfm {
  StateTfmConfig cfg;
  nn::Dense l1, l2, l3;
  nn::Tensor action_norm;  // (12) = per-dim scale then offset, fit on training data
  nn::Tensor norm_grad;    // unused slot so the normalization can ride in checkpoints

  StateTfm() = default;
  StateTfm(const StateTfmConfig& cfg, Rng& rng);

  struct Cache {
    nn::Tensor x, a1, h1, a2, h2;
  };
  nn::Tensor forward(const nn::Tensor& x, Cache* cache = nullptr) const;  // raw outputs
  void backward(const Cache& cache, const nn::Tensor& dy);

  std::vector<nn::ParamRef> trainable_params();
  std::vector<nn::ParamRef> checkpoint_params();  // trainable + normalization
};

// Flattened network input for one window; sizes are validated against cfg.
nn::Tensor encode_state_input(const StateTfmConfig& cfg, const std::vector<double>& s,
                              const std::vector<Vec6>& poses,
                              const std::vector<Vec6>& planned_poses,
                              const nn::Tensor& action_norm);

// Full forecast for one window: encode, run the network, add the last
// measured location back onto the predicted changes, clamp to [0, 1].
std::vector<double> predict_horizon(const StateTfm& model, const std::vector<double>& s,
                                    const std::vector<Vec6>& poses,
                                    const std::vector<Vec6>& planned_poses);

class StateTfmPredictor : public Predictor {
 public:
  explicit StateTfmPredictor(std::shared_ptr<const StateTfm> model) : model_(std::move(model)) {}
  std::string name() const override { return "state"; }
  bool ready() const override { return model_ != nullptr; }
  ForecastResult predict(const PredictorInput& in) override;

 private:
  std::shared_ptr<const StateTfm> model_;
};

void save_state_tfm(const std::string& path, uint64_t config_hash, StateTfm& model);
StateTfm load_state_tfm(const std::string& path, uint64_t config_hash, const StateTfmConfig& cfg);

}  // namespace stempush::forecast
