#pragma once

#include "stempush/nn/layers.hpp"
#include "stempush/tactile/dataset.hpp"

#include <string>
#include <vector>

namespace stempush::tactile {

struct ClmConfig {
  int resolution = 64;
  int conv1_channels = 8;
  int conv2_channels = 16;
  int dense1 = 40;
  int dense2 = 24;

  void validate() const;
};

ClmConfig clm_config_from_config(const Config& cfg);

// Contact localisation: two stride-2 convolution stages feed three dense
// stages ending in one scalar, read as the normalized axial contact location.
struct ClmModel {
  ClmConfig cfg;
  nn::Conv2d c1, c2;
  nn::Dense d1, d2, d3;

  ClmModel() = default;
  ClmModel(const ClmConfig& cfg, Rng& rng);

  int64_t param_count() const;
  std::vector<nn::ParamRef> params();

  // Raw (unclamped) outputs for a batch, with the caches backward needs.
  struct Cache {
    nn::Tensor x, a1, h1, a2, flat, a3, h3, a4, h4;
  };
  nn::Tensor forward(const nn::Tensor& x, Cache* cache = nullptr) const;
  void backward(const Cache& cache, const nn::Tensor& dy);
};

// Frames -> network input: channel-planar, pixel values shifted to [-0.5, 0.5].
nn::Tensor frames_to_tensor(const std::vector<const TactileFrame*>& frames);

// Deterministic forward pass; output clamped to [0, 1]. Throws when the frame
// resolution does not match the model.
double clm_predict(const ClmModel& model, const TactileFrame& frame);

struct ClmTrainConfig {
  int epochs = 80;
  int batch = 16;
  double lr = 3e-3;
  double momentum = 0.9;
  double val_fraction = 0.2;
  uint64_t seed = 1;
};

ClmTrainConfig clm_train_config_from_config(const Config& cfg);

struct ClmTrainReport {
  std::vector<double> train_loss;  // mean squared error per epoch
  std::vector<double> val_loss;
  std::vector<double> val_labels;  // held-out press locations
  double val_mae = 0.0;            // on clamped predictions
};

// Mini-batch SGD on mean squared error. The validation split holds out whole
// press locations so the score measures interpolation between locations, not
// frame memorization. Throws on a non-finite loss, quoting the last finite one.
ClmModel train_clm(const std::vector<ClmSample>& samples, const ClmConfig& cfg,
                   const ClmTrainConfig& train, ClmTrainReport* report = nullptr);

void save_clm(const std::string& path, uint64_t config_hash, ClmModel& model);
ClmModel load_clm(const std::string& path, uint64_t config_hash, const ClmConfig& cfg);

}  // namespace stempush::tactile
