#include "stempush/forecast/image_tfm.hpp"

#include "stempush/nn/checkpoint.hpp"
#include "stempush/strfmt.hpp"

#include <algorithm>
#include <cmath>

namespace stempush::forecast {

void ImageTfmConfig::validate() const {
  if (resolution < 8 || resolution % 4 != 0)
    throw ValidationError("image tfm: resolution must be a multiple of 4 and at least 8");
  if (enc1_channels <= 0 || enc2_channels <= 0 || lstm_channels <= 0)
    throw ValidationError("image tfm: channel counts must be positive");
  if (context < 2) throw ValidationError("image tfm: context must be at least 2 frames");
  if (horizon < 1) throw ValidationError("image tfm: horizon must be at least 1 frame");
}

ImageTfmConfig image_tfm_config_from_config(const Config& cfg) {
  ImageTfmConfig c;
  c.resolution = static_cast<int>(cfg.integer("forecast.image_tfm.resolution"));
  c.enc1_channels = static_cast<int>(cfg.integer("forecast.image_tfm.enc1_channels"));
  c.enc2_channels = static_cast<int>(cfg.integer("forecast.image_tfm.enc2_channels"));
  c.lstm_channels = static_cast<int>(cfg.integer("forecast.image_tfm.lstm_channels"));
  c.context = static_cast<int>(cfg.integer("forecast.context"));
  c.horizon = static_cast<int>(cfg.integer("forecast.horizon"));
  c.validate();
  return c;
}

ImageTfm::ImageTfm(const ImageTfmConfig& cfg_, Rng& rng) : cfg(cfg_) {
  cfg.validate();
  e1 = nn::Conv2d(TactileFrame::kChannels, cfg.enc1_channels, 3, 1, 1, rng);
  e2 = nn::Conv2d(cfg.enc1_channels, cfg.enc2_channels, 3, 1, 1, rng);
  r1 = nn::ConvLstmCell(cfg.enc2_channels + 6, cfg.lstm_channels, rng);
  r2 = nn::ConvLstmCell(cfg.lstm_channels, cfg.lstm_channels, rng);
  d1 = nn::Conv2d(cfg.lstm_channels, cfg.enc1_channels, 3, 1, 1, rng);
  d2 = nn::Conv2d(cfg.enc1_channels, cfg.enc1_channels, 3, 1, 1, rng);
  head = nn::Conv2d(cfg.enc1_channels, TactileFrame::kChannels, 3, 1, 1, rng);
  action_norm = nn::Tensor({12});
  for (int d = 0; d < 6; ++d) action_norm.data[static_cast<size_t>(d)] = 1.0;
  norm_grad = nn::Tensor({12});
}

ImageTfm::State ImageTfm::initial(int n) const {
  const int latent = cfg.resolution / 4;
  State s;
  s.s1 = r1.initial(n, latent, latent);
  s.s2 = r2.initial(n, latent, latent);
  return s;
}

namespace {

nn::Tensor tile_action(const nn::Tensor& action, int h, int w) {
  const int n = action.dim(0);
  nn::Tensor out({n, 6, h, w});
  for (int ni = 0; ni < n; ++ni)
    for (int c = 0; c < 6; ++c) {
      const double v = action.at2(ni, c);
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) out.at4(ni, c, y, x) = v;
    }
  return out;
}

nn::Tensor shift(const nn::Tensor& x, double scale, double offset) {
  nn::Tensor out = x;
  for (double& v : out.data) v = v * scale + offset;
  return out;
}

// The input skip enters in pre-tanh space so that a zero decoder output
// reproduces the input exactly: the network learns the frame-to-frame change.
// The clip bounds the skip gradient (max 2/(1-clip^2) ~ 50) so that gradients
// carried through self-fed frames stay well conditioned.
constexpr double kSkipClip = 1.0 - 1e-2;

double skip_fwd(double x) { return std::atanh(std::clamp(2.0 * x - 1.0, -kSkipClip, kSkipClip)); }

double skip_grad(double x) {
  const double w = 2.0 * x - 1.0;
  if (w <= -kSkipClip || w >= kSkipClip) return 0.0;
  return 2.0 / (1.0 - w * w);
}

}  // namespace

nn::Tensor ImageTfm::step(State& state, const nn::Tensor& x_prev, const nn::Tensor& action,
                          StepCache* cache) const {
  if (x_prev.shape.size() != 4 || x_prev.dim(1) != TactileFrame::kChannels ||
      x_prev.dim(2) != cfg.resolution || x_prev.dim(3) != cfg.resolution)
    throw ValidationError("image tfm: input " + nn::shape_str(x_prev.shape) +
                          " does not match a " + fmt_int(cfg.resolution) + "px model");
  if (action.shape.size() != 2 || action.dim(0) != x_prev.dim(0) || action.dim(1) != 6)
    throw ValidationError("image tfm: action tensor must be (N,6)");

  StepCache local;
  StepCache& c = cache != nullptr ? *cache : local;
  c.x_prev = x_prev;
  c.xin = shift(x_prev, 1.0, -0.5);
  c.a1 = e1.forward(c.xin);
  c.h1 = nn::relu(c.a1);
  c.p1 = pool.forward(c.h1, &c.am1);
  c.a2 = e2.forward(c.p1);
  c.h2 = nn::relu(c.a2);
  c.p2 = pool.forward(c.h2, &c.am2);
  const nn::Tensor z = nn::concat_channels(c.p2, tile_action(action, c.p2.dim(2), c.p2.dim(3)));
  state.s1 = r1.forward(z, state.s1, &c.c1);
  state.s2 = r2.forward(state.s1.h, state.s2, &c.c2);
  c.u1 = up.forward(state.s2.h);
  c.a3 = d1.forward(c.u1);
  c.h3 = nn::relu(c.a3);
  c.u2 = up.forward(c.h3);
  c.a4 = d2.forward(c.u2);
  c.h4 = nn::relu(c.a4);
  nn::Tensor pre = head.forward(c.h4);
  for (size_t i = 0; i < pre.data.size(); ++i) pre.data[i] += skip_fwd(x_prev.data[i]);
  c.y = nn::tanh_fwd(pre);
  return shift(c.y, 0.5, 0.5);
}

nn::Tensor ImageTfm::step_backward(const StepCache& c, const nn::Tensor& dxhat, State& dstate) {
  const int n = c.x_prev.dim(0);
  nn::Tensor dx_prev({n, TactileFrame::kChannels, cfg.resolution, cfg.resolution});
  nn::Tensor dh2 = dstate.s2.h;

  if (dxhat.size() > 0) {
    if (!nn::same_shape(dxhat, c.x_prev))
      throw ValidationError("image tfm: output gradient shape mismatch");
    const nn::Tensor dy = shift(dxhat, 0.5, 0.0);
    const nn::Tensor dpre = nn::tanh_backward(c.y, dy);
    for (size_t i = 0; i < dx_prev.data.size(); ++i)
      dx_prev.data[i] += skip_grad(c.x_prev.data[i]) * dpre.data[i];
    nn::Tensor dh4 = head.backward(c.h4, dpre);
    nn::Tensor da4 = nn::relu_backward(c.a4, dh4);
    nn::Tensor du2 = d2.backward(c.u2, da4);
    nn::Tensor dh3 = up.backward(du2);
    nn::Tensor da3 = nn::relu_backward(c.a3, dh3);
    nn::Tensor du1 = d1.backward(c.u1, da3);
    dh2 += up.backward(du1);
  }

  nn::ConvLstmCell::BackGrads bg2 = r2.backward(c.c2, dh2, dstate.s2.c);
  nn::Tensor dh1 = bg2.dx;
  dh1 += dstate.s1.h;
  nn::ConvLstmCell::BackGrads bg1 = r1.backward(c.c1, dh1, dstate.s1.c);
  dstate.s1 = std::move(bg1.dprev);
  dstate.s2 = std::move(bg2.dprev);

  const auto [dp2, daction] = nn::split_channels(bg1.dx, cfg.enc2_channels);
  (void)daction;  // actions are inputs, not parameters
  nn::Tensor dh2e = pool.backward(c.am2, dp2, c.h2.shape);
  nn::Tensor da2 = nn::relu_backward(c.a2, dh2e);
  nn::Tensor dp1 = e2.backward(c.p1, da2);
  nn::Tensor dh1e = pool.backward(c.am1, dp1, c.h1.shape);
  nn::Tensor da1 = nn::relu_backward(c.a1, dh1e);
  dx_prev += e1.backward(c.xin, da1);
  return dx_prev;
}

std::vector<nn::ParamRef> ImageTfm::trainable_params() {
  std::vector<nn::ParamRef> refs;
  e1.collect(refs, "image_tfm.e1");
  e2.collect(refs, "image_tfm.e2");
  r1.collect(refs, "image_tfm.r1");
  r2.collect(refs, "image_tfm.r2");
  d1.collect(refs, "image_tfm.d1");
  d2.collect(refs, "image_tfm.d2");
  head.collect(refs, "image_tfm.head");
  return refs;
}

std::vector<nn::ParamRef> ImageTfm::checkpoint_params() {
  std::vector<nn::ParamRef> refs = trainable_params();
  refs.push_back({"image_tfm.action_norm", &action_norm, &norm_grad});
  return refs;
}

int64_t ImageTfm::param_count() const {
  int64_t count = 0;
  for (const nn::Conv2d* conv : {&e1, &e2, &d1, &d2, &head}) count += conv->param_count();
  count += r1.gates.param_count() + r2.gates.param_count();
  return count;
}

nn::Tensor frame_to_input(const TactileFrame& frame) {
  if (frame.resolution <= 0) throw ValidationError("image tfm: empty frame");
  const int res = frame.resolution;
  nn::Tensor x({1, TactileFrame::kChannels, res, res});
  for (int c = 0; c < TactileFrame::kChannels; ++c)
    for (int y = 0; y < res; ++y)
      for (int xx = 0; xx < res; ++xx)
        x.at4(0, c, y, xx) = static_cast<double>(frame.at(y, xx, c));
  return x;
}

TactileFrame tensor_to_frame(const nn::Tensor& x, int n, double timestamp) {
  const int res = x.dim(2);
  TactileFrame frame = make_frame(res, timestamp);
  for (int c = 0; c < TactileFrame::kChannels; ++c)
    for (int y = 0; y < res; ++y)
      for (int xx = 0; xx < res; ++xx)
        frame.at(y, xx, c) =
            static_cast<float>(std::clamp(x.at4(n, c, y, xx), 0.0, 1.0));
  return frame;
}

nn::Tensor encode_action(const Vec6& pose, const Vec6& reference, const nn::Tensor& action_norm) {
  if (action_norm.size() != 12)
    throw ValidationError("image tfm: action normalization must have 12 entries");
  nn::Tensor a({1, 6});
  for (int d = 0; d < 6; ++d) {
    const double raw = d < 3 ? pose[d] - reference[d] : pose[d];
    a.data[static_cast<size_t>(d)] = (raw - action_norm.data[static_cast<size_t>(6 + d)]) /
                                     action_norm.data[static_cast<size_t>(d)];
  }
  return a;
}

std::vector<TactileFrame> rollout_image_tfm(const ImageTfm& model,
                                            const std::vector<TactileFrame>& context,
                                            const std::vector<Vec6>& poses,
                                            const std::vector<Vec6>& planned_poses) {
  const int c = model.cfg.context;
  const int h = model.cfg.horizon;
  if (context.size() != static_cast<size_t>(c) || poses.size() != context.size())
    throw ValidationError("image tfm: context carries " +
                          fmt_int(static_cast<long long>(context.size())) +
                          " frames, expected " + fmt_int(c));
  if (planned_poses.size() != static_cast<size_t>(h))
    throw ValidationError("image tfm: got " +
                          fmt_int(static_cast<long long>(planned_poses.size())) +
                          " planned poses for a horizon of " + fmt_int(h));

  const Vec6& ref = poses.back();
  ImageTfm::State state = model.initial(1);
  for (int t = 1; t < c; ++t) {
    const nn::Tensor x = frame_to_input(context[static_cast<size_t>(t - 1)]);
    model.step(state, x, encode_action(poses[static_cast<size_t>(t)], ref, model.action_norm),
               nullptr);
  }
  std::vector<TactileFrame> out;
  out.reserve(static_cast<size_t>(h));
  nn::Tensor x = frame_to_input(context.back());
  for (int i = 0; i < h; ++i) {
    x = model.step(state, x,
                   encode_action(planned_poses[static_cast<size_t>(i)], ref, model.action_norm),
                   nullptr);
    out.push_back(tensor_to_frame(x, 0, 0.0));
  }
  return out;
}

ForecastResult ImageTfmPredictor::predict(const PredictorInput& in) {
  if (!ready()) throw ValidationError("image tfm predictor: model not ready");
  const std::vector<TactileFrame> frames =
      rollout_image_tfm(*model_, in.frames, in.poses, in.planned_poses);
  ForecastResult out;
  out.backend = name();
  out.s_hat.reserve(frames.size());
  for (const TactileFrame& f : frames)
    out.s_hat.push_back(std::clamp(tactile::clm_predict(*clm_, f), 0.0, 1.0));
  out.frames_hat = frames;
  return out;
}

void save_image_tfm(const std::string& path, uint64_t config_hash, ImageTfm& model) {
  nn::save_checkpoint(path, config_hash, model.checkpoint_params());
}

ImageTfm load_image_tfm(const std::string& path, uint64_t config_hash,
                        const ImageTfmConfig& cfg) {
  Rng rng(0);
  ImageTfm model(cfg, rng);
  nn::load_checkpoint(path, config_hash, model.checkpoint_params());
  return model;
}

}  // namespace stempush::forecast
