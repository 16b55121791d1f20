#include "stempush/forecast/state_tfm.hpp"

#include "stempush/nn/checkpoint.hpp"
#include "stempush/strfmt.hpp"

#include <algorithm>
#include <cmath>

namespace stempush::forecast {

void StateTfmConfig::validate() const {
  if (context < 2) throw ValidationError("state tfm: context must be at least 2 frames");
  if (horizon < 1) throw ValidationError("state tfm: horizon must be at least 1 frame");
  if (hidden1 <= 0 || hidden2 <= 0)
    throw ValidationError("state tfm: hidden widths must be positive");
}

StateTfmConfig state_tfm_config_from_config(const Config& cfg) {
  StateTfmConfig c;
  c.context = static_cast<int>(cfg.integer("forecast.context"));
  c.horizon = static_cast<int>(cfg.integer("forecast.horizon"));
  c.hidden1 = static_cast<int>(cfg.integer("forecast.state_tfm.hidden1"));
  c.hidden2 = static_cast<int>(cfg.integer("forecast.state_tfm.hidden2"));
  c.validate();
  return c;
}

StateTfm::StateTfm(const StateTfmConfig& cfg_, Rng& rng) : cfg(cfg_) {
  cfg.validate();
  l1 = nn::Dense(cfg.input_dim(), cfg.hidden1, rng);
  l2 = nn::Dense(cfg.hidden1, cfg.hidden2, rng);
  l3 = nn::Dense(cfg.hidden2, cfg.horizon, rng);
  action_norm = nn::Tensor({12});
  for (int d = 0; d < 6; ++d) action_norm.data[static_cast<size_t>(d)] = 1.0;
  norm_grad = nn::Tensor({12});
}

nn::Tensor StateTfm::forward(const nn::Tensor& x, Cache* cache) const {
  nn::Tensor a1 = l1.forward(x);
  nn::Tensor h1 = nn::relu(a1);
  nn::Tensor a2 = l2.forward(h1);
  nn::Tensor h2 = nn::relu(a2);
  nn::Tensor y = l3.forward(h2);
  if (cache != nullptr) {
    cache->x = x;
    cache->a1 = std::move(a1);
    cache->h1 = std::move(h1);
    cache->a2 = std::move(a2);
    cache->h2 = std::move(h2);
  }
  return y;
}

void StateTfm::backward(const Cache& cache, const nn::Tensor& dy) {
  nn::Tensor dh2 = l3.backward(cache.h2, dy);
  nn::Tensor da2 = nn::relu_backward(cache.a2, dh2);
  nn::Tensor dh1 = l2.backward(cache.h1, da2);
  nn::Tensor da1 = nn::relu_backward(cache.a1, dh1);
  l1.backward(cache.x, da1);
}

std::vector<nn::ParamRef> StateTfm::trainable_params() {
  std::vector<nn::ParamRef> refs;
  l1.collect(refs, "state_tfm.l1");
  l2.collect(refs, "state_tfm.l2");
  l3.collect(refs, "state_tfm.l3");
  return refs;
}

std::vector<nn::ParamRef> StateTfm::checkpoint_params() {
  std::vector<nn::ParamRef> refs = trainable_params();
  refs.push_back({"state_tfm.action_norm", &action_norm, &norm_grad});
  return refs;
}

nn::Tensor encode_state_input(const StateTfmConfig& cfg, const std::vector<double>& s,
                              const std::vector<Vec6>& poses,
                              const std::vector<Vec6>& planned_poses,
                              const nn::Tensor& action_norm) {
  if (s.size() != static_cast<size_t>(cfg.context) || poses.size() != s.size())
    throw ValidationError("state tfm: context carries " +
                          fmt_int(static_cast<long long>(s.size())) + " samples, expected " +
                          fmt_int(cfg.context));
  if (planned_poses.size() != static_cast<size_t>(cfg.horizon))
    throw ValidationError("state tfm: got " +
                          fmt_int(static_cast<long long>(planned_poses.size())) +
                          " planned poses for a horizon of " + fmt_int(cfg.horizon));
  if (action_norm.size() != 12)
    throw ValidationError("state tfm: action normalization must have 12 entries");

  nn::Tensor x({1, cfg.input_dim()});
  double* out = x.data.data();
  for (int i = 0; i < cfg.context; ++i) *out++ = s[static_cast<size_t>(i)];
  const Vec6& ref = poses.back();
  const auto encode_pose = [&](const Vec6& pose) {
    for (int d = 0; d < 6; ++d) {
      const double raw = d < 3 ? pose[d] - ref[d] : pose[d];
      *out++ = (raw - action_norm.data[static_cast<size_t>(6 + d)]) /
               action_norm.data[static_cast<size_t>(d)];
    }
  };
  for (const Vec6& p : poses) encode_pose(p);
  for (const Vec6& p : planned_poses) encode_pose(p);
  return x;
}

std::vector<double> predict_horizon(const StateTfm& model, const std::vector<double>& s,
                                    const std::vector<Vec6>& poses,
                                    const std::vector<Vec6>& planned_poses) {
  const nn::Tensor x = encode_state_input(model.cfg, s, poses, planned_poses, model.action_norm);
  const nn::Tensor y = model.forward(x);
  std::vector<double> s_hat;
  s_hat.reserve(y.data.size());
  for (const double v : y.data) s_hat.push_back(std::clamp(s.back() + v, 0.0, 1.0));
  return s_hat;
}

ForecastResult StateTfmPredictor::predict(const PredictorInput& in) {
  if (model_ == nullptr) throw ValidationError("state tfm predictor: model not ready");
  ForecastResult out;
  out.backend = name();
  out.s_hat = predict_horizon(*model_, in.s, in.poses, in.planned_poses);
  return out;
}

void save_state_tfm(const std::string& path, uint64_t config_hash, StateTfm& model) {
  nn::save_checkpoint(path, config_hash, model.checkpoint_params());
}

StateTfm load_state_tfm(const std::string& path, uint64_t config_hash,
                        const StateTfmConfig& cfg) {
  Rng rng(0);
  StateTfm model(cfg, rng);
  nn::load_checkpoint(path, config_hash, model.checkpoint_params());
  return model;
}

}  // namespace stempush::forecast
