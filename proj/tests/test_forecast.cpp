#include <doctest.h>

#include "stempush/config.hpp"
#include "stempush/control/controllers.hpp"
#include "stempush/forecast/image_tfm.hpp"
#include "stempush/forecast/predictor.hpp"
#include "stempush/forecast/state_tfm.hpp"
#include "stempush/forecast/train.hpp"
#include "stempush/simworld/scenario.hpp"
#include "stempush/simworld/world.hpp"
#include "stempush/tactile/render.hpp"

#include <cmath>
#include <cstdio>
#include <memory>

using namespace stempush;
using namespace stempush::forecast;

namespace {

simworld::Models default_models() { return simworld::models_from_config(Config::defaults()); }

simworld::ScenarioSpec push_spec(double u0, double yaw) {
  simworld::ScenarioSpec s = simworld::scenario_from_config(Config::defaults());
  s.u0 = u0;
  s.yaw = yaw;
  return s;
}

// Open-loop run that also exposes each frame to a predictor and records the
// commands it issued, so tests can replay the exact plan.
struct TapController : simworld::CommandSource {
  control::OpenLoopController inner;
  Predictor* predictor = nullptr;
  int observe_at = -1;  // frame index handed to the predictor
  std::vector<Vec6> commands;
  std::vector<bool> sticking;

  explicit TapController(const control::TrajectorySpec& spec) : inner(spec) {}

  control::ControlCommand tick(const simworld::FrameObs& obs) override {
    if (predictor != nullptr && obs.frame_index == observe_at) predictor->observe(obs);
    const control::ControlCommand cmd = inner.tick(obs);
    commands.push_back(cmd.total);
    sticking.push_back(obs.world != nullptr && obs.world->contact.sticking);
    return cmd;
  }
};

struct OpenLoopRun {
  RolloutLog log;
  std::vector<Vec6> commands;
  std::vector<bool> sticking;
  double duration = 0.0;
};

OpenLoopRun run_push(const simworld::Models& models, const simworld::ScenarioSpec& spec,
                     uint64_t seed, Predictor* predictor = nullptr, int observe_at = -1) {
  const simworld::Scenario sc = simworld::build_scenario(models, spec);
  TapController ctrl(sc.trajectory);
  ctrl.predictor = predictor;
  ctrl.observe_at = observe_at;
  simworld::RolloutOptions opt;
  opt.duration_s = sc.duration;
  opt.seed = seed;
  Rng rng(seed);
  OpenLoopRun run;
  run.log = simworld::rollout(sc.initial, ctrl, nullptr, models, opt, rng);
  run.commands = std::move(ctrl.commands);
  run.sticking = std::move(ctrl.sticking);
  run.duration = sc.duration;
  return run;
}

int first_measured_frame(const RolloutLog& log) {
  for (size_t i = 0; i < log.frames.size(); ++i)
    if (log.frames[i].u_measured.has_value()) return static_cast<int>(i);
  return -1;
}

// Straight-line pushes at different speeds with the contact location drifting
// proportionally to the travelled distance: exactly representable by a linear
// map from the encoded input, so a trained model should nail it.
std::vector<RolloutLog> drift_logs(int n_logs, int n_frames) {
  std::vector<RolloutLog> logs;
  for (int k = 0; k < n_logs; ++k) {
    RolloutLog log;
    const double v = 0.006 + 0.002 * k;  // m/s along +y
    const double s0 = 0.30 + 0.03 * (k % 4);
    log.frames.resize(static_cast<size_t>(n_frames));
    for (int i = 0; i < n_frames; ++i) {
      FrameRecord& fr = log.frames[static_cast<size_t>(i)];
      fr.t = i / 60.0;
      fr.ee_pose = Vec6::Zero();
      fr.ee_pose[1] = v * fr.t;
      fr.u_measured = s0 + 3.0 * v * fr.t;
      fr.u_true = fr.u_measured;
      fr.in_contact = true;
    }
    logs.push_back(std::move(log));
  }
  return logs;
}

// Identical rest frames with the finger parked away from the stem: nothing to
// predict beyond reproducing the one image the sensor ever sees.
std::vector<RolloutLog> static_logs(int n_logs, int n_frames, const TactileFrame& rest) {
  std::vector<RolloutLog> logs;
  for (int k = 0; k < n_logs; ++k) {
    RolloutLog log;
    log.frames.resize(static_cast<size_t>(n_frames));
    log.rendered.assign(static_cast<size_t>(n_frames), rest);
    for (int i = 0; i < n_frames; ++i) {
      FrameRecord& fr = log.frames[static_cast<size_t>(i)];
      fr.t = i / 60.0;
      fr.ee_pose = Vec6::Zero();
      fr.ee_pose[0] = 0.1 * k;  // distinct parking spot per run
    }
    logs.push_back(std::move(log));
  }
  return logs;
}

ImageTfmConfig tiny_image_cfg(int context = 3, int horizon = 3) {
  ImageTfmConfig cfg;
  cfg.resolution = 16;
  cfg.enc1_channels = 4;
  cfg.enc2_channels = 6;
  cfg.lstm_channels = 6;
  cfg.context = context;
  cfg.horizon = horizon;
  return cfg;
}

TactileFrame noise_frame(int resolution, Rng& rng) {
  TactileFrame f = make_frame(resolution);
  for (float& p : f.pixels) p = static_cast<float>(rng.uniform());
  return f;
}

// Shared across the state-model cases: two dozen short pushes with varied
// start point, attitude, speed, and travel, measured by the ground-truth
// fallback (no sensor). The context must span a full stick-slip period for
// the release timing to be inferable, hence 10 frames of each.
struct PushSet {
  std::vector<RolloutLog> logs;
  StateTfmConfig cfg;
  TfmTrainConfig train;
  TfmTrainReport report;
  StateTfm model;
};

const PushSet& trained_push_set() {
  static const PushSet set = [] {
    PushSet s;
    const simworld::Models models = default_models();
    Rng scen_rng(77);
    for (int i = 0; i < 24; ++i) {
      simworld::ScenarioSpec spec =
          push_spec(0.15 + 0.7 * scen_rng.uniform(),
                    (i % 2 == 0 ? 1.0 : -1.0) * (0.3 + 0.5 * scen_rng.uniform()));
      spec.speed = 0.008 + 0.008 * scen_rng.uniform();
      spec.approach = 0.015;
      spec.push = 0.03 + 0.02 * scen_rng.uniform();
      spec.settle = 0.2;
      s.logs.push_back(run_push(models, spec, 100 + static_cast<uint64_t>(i)).log);
    }
    s.cfg.context = 10;
    s.cfg.horizon = 10;
    s.cfg.hidden1 = 48;
    s.cfg.hidden2 = 48;
    s.train.epochs = 200;
    s.train.batch = 32;
    s.train.lr = 0.02;
    s.train.window_stride = 2;
    s.train.val_fraction = 0.2;
    s.train.seed = 11;
    s.model = train_state_tfm(s.logs, s.cfg, s.train, &s.report);
    return s;
  }();
  return set;
}

}  // namespace

TEST_CASE("physics oracle holds a settled sticking contact") {
  const simworld::Models models = default_models();
  const simworld::ScenarioSpec spec = push_spec(0.6, 0.8);
  PredictorConfig pc;
  pc.context = 2;
  pc.horizon = 8;

  // First pass just to size the run; the oracle then snapshots the last frame.
  const OpenLoopRun sized = run_push(models, spec, 5);
  const int last = static_cast<int>(sized.log.frames.size()) - 1;
  PhysicsOracle oracle(pc, 1e-3, sized.duration);
  CHECK_FALSE(oracle.ready());
  const OpenLoopRun run = run_push(models, spec, 5, &oracle, last);
  CHECK(oracle.ready());

  REQUIRE(run.log.frames[static_cast<size_t>(last)].u_true.has_value());
  REQUIRE(run.sticking[static_cast<size_t>(last)]);
  const double s_t = *run.log.frames[static_cast<size_t>(last)].u_true;

  PredictorInput in;
  in.s = {s_t, s_t};
  in.poses.assign(2, run.log.frames[static_cast<size_t>(last)].ee_pose);
  in.planned_poses.assign(8, run.log.frames[static_cast<size_t>(last)].ee_pose);
  in.planned_twists.assign(8, Vec6::Zero());
  const ForecastResult out = oracle.predict(in);
  CHECK(out.backend == "physics");
  REQUIRE(out.s_hat.size() == 8);
  for (const double s : out.s_hat) CHECK(s == s_t);  // frozen world: exact
}

TEST_CASE("physics oracle replays the executed plan exactly") {
  const simworld::Models models = default_models();
  const simworld::ScenarioSpec spec = push_spec(0.55, 0.8);
  PredictorConfig pc;
  pc.context = 2;
  pc.horizon = 10;

  const OpenLoopRun sized = run_push(models, spec, 9);
  const int touch = first_measured_frame(sized.log);
  REQUIRE(touch >= 0);
  const int k = touch + 5;
  REQUIRE(k + pc.horizon + 1 < static_cast<int>(sized.log.frames.size()));

  PhysicsOracle oracle(pc, 1e-3, sized.duration);
  const OpenLoopRun run = run_push(models, spec, 9, &oracle, k);

  PredictorInput in;
  in.s = {0.5, 0.5};
  in.poses.assign(2, run.log.frames[static_cast<size_t>(k)].ee_pose);
  in.planned_poses.assign(10, Vec6::Zero());
  in.planned_twists.assign(run.commands.begin() + k, run.commands.begin() + k + 10);
  const ForecastResult out = oracle.predict(in);
  REQUIRE(out.s_hat.size() == 10);

  // The rollout executed exactly the planned commands, so the forecast must
  // match the logged ground truth bit for bit.
  for (int i = 0; i < 10; ++i) {
    const auto& truth = run.log.frames[static_cast<size_t>(k + 1 + i)].u_true;
    REQUIRE(truth.has_value());
    CHECK(out.s_hat[static_cast<size_t>(i)] == *truth);
  }
}

TEST_CASE("physics oracle validates its inputs") {
  PredictorConfig pc;
  pc.context = 2;
  pc.horizon = 4;
  PhysicsOracle oracle(pc, 1e-3, 1.0);

  PredictorInput in;
  in.s = {0.5, 0.5};
  in.planned_twists.assign(4, Vec6::Zero());
  CHECK_THROWS_AS(oracle.predict(in), ValidationError);  // never observed

  simworld::FrameObs bare;  // no world snapshot attached
  CHECK_THROWS_AS(oracle.observe(bare), ValidationError);

  const simworld::Models models = default_models();
  const simworld::ScenarioSpec spec = push_spec(0.5, 0.8);
  const OpenLoopRun sized = run_push(default_models(), spec, 3);
  PhysicsOracle live(pc, 1e-3, sized.duration);
  run_push(models, spec, 3, &live, 10);
  PredictorInput wrong = in;
  wrong.planned_twists.assign(3, Vec6::Zero());
  CHECK_THROWS_AS(live.predict(wrong), ValidationError);
}

TEST_CASE("persistence predictor holds the last measurement") {
  PredictorConfig pc;
  pc.context = 3;
  pc.horizon = 5;
  PersistencePredictor p(pc);
  PredictorInput in;
  in.s = {0.2, 0.3, 0.4};
  const ForecastResult out = p.predict(in);
  REQUIRE(out.s_hat.size() == 5);
  for (const double s : out.s_hat) CHECK(s == 0.4);

  in.s = {1.7};
  for (const double s : p.predict(in).s_hat) CHECK(s == 1.0);  // clamped

  in.s.clear();
  CHECK_THROWS_AS(p.predict(in), ValidationError);
}

TEST_CASE("every backend honours the horizon-length contract") {
  const int horizon = 7;
  PredictorConfig pc;
  pc.context = 4;
  pc.horizon = horizon;

  PredictorInput in;
  in.s = {0.5, 0.51, 0.52, 0.53};
  in.poses.assign(4, Vec6::Zero());
  in.planned_poses.assign(static_cast<size_t>(horizon), Vec6::Zero());
  in.planned_twists.assign(static_cast<size_t>(horizon), Vec6::Zero());
  Rng rng(2);
  for (int i = 0; i < 4; ++i) in.frames.push_back(noise_frame(16, rng));

  PersistencePredictor persistence(pc);

  StateTfmConfig scfg;
  scfg.context = 4;
  scfg.horizon = horizon;
  scfg.hidden1 = 8;
  scfg.hidden2 = 8;
  StateTfmPredictor state(std::make_shared<StateTfm>(scfg, rng));

  ImageTfmConfig icfg = tiny_image_cfg(4, horizon);
  ImageTfmPredictor image(std::make_shared<ImageTfm>(icfg, rng),
                          std::make_shared<tactile::ClmModel>(
                              [] {
                                tactile::ClmConfig c;
                                c.resolution = 16;
                                c.conv1_channels = 4;
                                c.conv2_channels = 4;
                                c.dense1 = 8;
                                c.dense2 = 8;
                                return c;
                              }(),
                              rng));

  for (Predictor* p : {static_cast<Predictor*>(&persistence), static_cast<Predictor*>(&state),
                       static_cast<Predictor*>(&image)}) {
    const ForecastResult out = p->predict(in);
    CHECK(out.s_hat.size() == static_cast<size_t>(horizon));
    for (const double s : out.s_hat) {
      CHECK(s >= 0.0);
      CHECK(s <= 1.0);
    }
  }
}

TEST_CASE("untrained image model keeps frame shape and pixel range") {
  Rng rng(4);
  const ImageTfmConfig cfg = tiny_image_cfg();
  const ImageTfm model(cfg, rng);

  std::vector<TactileFrame> context;
  std::vector<Vec6> poses(3, Vec6::Zero());
  std::vector<Vec6> planned(3, Vec6::Zero());
  for (int i = 0; i < 3; ++i) context.push_back(noise_frame(16, rng));

  const std::vector<TactileFrame> out = rollout_image_tfm(model, context, poses, planned);
  REQUIRE(out.size() == 3);
  for (const TactileFrame& f : out) {
    CHECK(f.resolution == 16);
    CHECK(f.pixels.size() == context.front().pixels.size());
    for (const float p : f.pixels) {
      CHECK(p >= 0.0f);
      CHECK(p <= 1.0f);
    }
  }

  std::vector<TactileFrame> short_ctx(context.begin(), context.begin() + 2);
  CHECK_THROWS_AS(rollout_image_tfm(model, short_ctx, poses, planned), ValidationError);
  std::vector<Vec6> short_plan(2, Vec6::Zero());
  CHECK_THROWS_AS(rollout_image_tfm(model, context, poses, short_plan), ValidationError);
}

TEST_CASE("image rollout feeds its own prediction back exactly") {
  Rng rng(6);
  const ImageTfmConfig cfg = tiny_image_cfg(3, 2);
  const ImageTfm model(cfg, rng);

  std::vector<TactileFrame> context;
  for (int i = 0; i < 3; ++i) context.push_back(noise_frame(16, rng));
  std::vector<Vec6> poses(3, Vec6::Zero());
  std::vector<Vec6> planned(2, Vec6::Zero());
  planned[0][1] = 0.001;
  planned[1][1] = 0.002;

  const std::vector<TactileFrame> out = rollout_image_tfm(model, context, poses, planned);

  // Replay the factorisation by hand: warm up on the context, take one step
  // from the last real frame, then feed that prediction straight back in.
  ImageTfm::State state = model.initial(1);
  for (int t = 1; t < 3; ++t)
    model.step(state, frame_to_input(context[static_cast<size_t>(t - 1)]),
               encode_action(poses[static_cast<size_t>(t)], poses.back(), model.action_norm),
               nullptr);
  const nn::Tensor p1 = model.step(state, frame_to_input(context.back()),
                                   encode_action(planned[0], poses.back(), model.action_norm),
                                   nullptr);
  const nn::Tensor p2 = model.step(
      state, p1, encode_action(planned[1], poses.back(), model.action_norm), nullptr);

  const TactileFrame f1 = tensor_to_frame(p1, 0, 0.0);
  const TactileFrame f2 = tensor_to_frame(p2, 0, 0.0);
  REQUIRE(out.size() == 2);
  CHECK(out[0].pixels == f1.pixels);
  CHECK(out[1].pixels == f2.pixels);
}

TEST_CASE("window extraction respects stride, gaps, and frame needs") {
  std::vector<RolloutLog> logs = drift_logs(2, 25);
  logs[0].frames[12].u_measured.reset();  // hole in the middle

  const std::vector<PushWindow> all = extract_windows(logs, 4, 4, 1, false);
  // Log 0: starts 0..17 minus those covering frame 12 (starts 5..12) = 10.
  // Log 1: all 18 starts.
  CHECK(all.size() == 28);
  for (const PushWindow& w : all) {
    CHECK(w.s.size() == 8);
    CHECK(w.poses.size() == 8);
    CHECK(w.frames.empty());
  }

  const std::vector<PushWindow> strided = extract_windows(logs, 4, 4, 5, false);
  CHECK(strided.size() < all.size());

  // No retained images anywhere: frame-needing extraction finds nothing.
  CHECK(extract_windows(logs, 4, 4, 1, true).empty());

  // Without the measurement requirement the hole no longer matters.
  const std::vector<PushWindow> loose = extract_windows(logs, 4, 4, 1, false, false);
  CHECK(loose.size() == 36);

  CHECK_THROWS_AS(extract_windows(logs, 1, 4, 1, false), ValidationError);
  CHECK_THROWS_AS(extract_windows(logs, 4, 4, 0, false), ValidationError);
}

TEST_CASE("action normalization floors constant dimensions") {
  const std::vector<RolloutLog> logs = drift_logs(3, 20);
  const std::vector<PushWindow> windows = extract_windows(logs, 4, 4, 2, false);
  const nn::Tensor norm = fit_action_norm(windows, 4);
  REQUIRE(norm.data.size() == 12);
  CHECK(norm.data[1] > 1e-4);  // the moving axis has real spread
  for (const int d : {0, 2, 3, 4, 5}) CHECK(norm.data[static_cast<size_t>(d)] == 1e-6);
  for (int d = 6; d < 12; ++d) CHECK(norm.data[static_cast<size_t>(d)] == 0.0);
}

TEST_CASE("action normalization z-scores orientation around the dataset mean") {
  PushWindow a, b;
  a.source = 0;
  b.source = 1;
  for (int k = 0; k < 4; ++k) {
    Vec6 pa = Vec6::Zero();
    Vec6 pb = Vec6::Zero();
    pa[4] = 0.8;  // two constant attitudes, mirrored
    pb[4] = -0.8;
    a.poses.push_back(pa);
    b.poses.push_back(pb);
    a.s.push_back(0.5);
    b.s.push_back(0.5);
  }
  const nn::Tensor norm = fit_action_norm({a, b}, 2);
  CHECK(norm.data[10] == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(norm.data[4] == doctest::Approx(0.8));

  // The mirrored attitudes stay distinguishable after encoding, even though
  // each is constant within its own push.
  const nn::Tensor ea = encode_action(a.poses[2], a.poses[1], norm);
  const nn::Tensor eb = encode_action(b.poses[2], b.poses[1], norm);
  CHECK(ea.data[4] == doctest::Approx(1.0));
  CHECK(eb.data[4] == doctest::Approx(-1.0));
}

TEST_CASE("state model learns a linear drift") {
  const std::vector<RolloutLog> logs = drift_logs(8, 40);
  StateTfmConfig cfg;
  cfg.context = 4;
  cfg.horizon = 4;
  cfg.hidden1 = 32;
  cfg.hidden2 = 32;
  TfmTrainConfig train;
  train.epochs = 400;
  train.batch = 16;
  train.lr = 0.05;
  train.window_stride = 2;
  train.val_fraction = 0.25;
  train.seed = 3;

  TfmTrainReport report;
  const StateTfm model = train_state_tfm(logs, cfg, train, &report);
  CHECK(report.train_windows > 0);
  CHECK(report.val_windows > 0);
  CHECK(report.train_loss.back() <= report.train_loss.front());
  CHECK(report.val_mae < 0.01);

  // The drift is strictly monotone, so persistence must do measurably worse.
  CHECK(report.val_mae < report.persistence_mae);
  (void)model;
}

TEST_CASE("trained state model beats persistence on held-out pushes") {
  const PushSet& set = trained_push_set();
  CHECK(set.report.train_windows > 0);
  CHECK(set.report.val_windows > 0);
  CHECK(set.report.train_loss.back() <= set.report.train_loss.front());
  CHECK(set.report.val_mae < set.report.persistence_mae);

  // Same story on a scenario the trainer never saw at all.
  const simworld::Models models = default_models();
  simworld::ScenarioSpec spec = push_spec(0.52, 0.8);
  spec.approach = 0.015;
  spec.push = 0.04;
  spec.settle = 0.2;
  const OpenLoopRun fresh = run_push(models, spec, 777);
  const std::vector<PushWindow> windows =
      extract_windows({fresh.log}, set.cfg.context, set.cfg.horizon, 2, false);
  REQUIRE(windows.size() > 5);

  StateTfmPredictor predictor(std::make_shared<StateTfm>(set.model));
  const ForecastEval eval =
      evaluate_forecasts(predictor, windows, set.cfg.context, set.cfg.horizon);
  CHECK(eval.windows == static_cast<int>(windows.size()));
  CHECK(eval.mae < eval.persistence_mae);
}

TEST_CASE("trained state model responds to the planned actions") {
  const PushSet& set = trained_push_set();
  const std::vector<PushWindow> windows =
      extract_windows(set.logs, set.cfg.context, set.cfg.horizon, 7, false);
  REQUIRE(windows.size() > 10);

  StateTfmPredictor predictor(std::make_shared<StateTfm>(set.model));
  double mean_shift = 0.0;
  for (const PushWindow& w : windows) {
    PredictorInput in;
    in.s.assign(w.s.begin(), w.s.begin() + set.cfg.context);
    in.poses.assign(w.poses.begin(), w.poses.begin() + set.cfg.context);
    in.planned_poses.assign(w.poses.begin() + set.cfg.context, w.poses.end());
    const ForecastResult base = predictor.predict(in);
    for (Vec6& p : in.planned_poses) p[1] += 0.004;  // push further along +y
    const ForecastResult moved = predictor.predict(in);
    for (int i = 0; i < set.cfg.horizon; ++i)
      mean_shift += std::abs(moved.s_hat[static_cast<size_t>(i)] -
                             base.s_hat[static_cast<size_t>(i)]);
  }
  mean_shift /= static_cast<double>(windows.size()) * set.cfg.horizon;
  CHECK(mean_shift > 1e-4);
}

TEST_CASE("image model converges to the rest frame on static data") {
  const tactile::MarkerLayout layout = tactile::make_layout(16, 4, 4, 1.0);
  const TactileFrame rest = tactile::rest_frame(layout);
  const std::vector<RolloutLog> logs = static_logs(3, 14, rest);

  ImageTfmConfig cfg = tiny_image_cfg(3, 3);
  TfmTrainConfig train;
  train.epochs = 60;
  train.batch = 4;
  train.lr = 0.05;
  train.window_stride = 2;
  train.val_fraction = 0.34;
  train.teacher_forcing_fraction = 0.25;
  train.seed = 5;

  TfmTrainReport report;
  const ImageTfm model = train_image_tfm(logs, cfg, train, &report);
  for (const double loss : report.train_loss) CHECK(loss < 1e-4);

  const std::vector<PushWindow> windows =
      extract_windows(logs, cfg.context, cfg.horizon, 2, true, false);
  REQUIRE_FALSE(windows.empty());
  CHECK(image_horizon_mse(model, windows) < 1e-3);
}

TEST_CASE("image training improves on a drifting contact") {
  const tactile::MarkerLayout layout = tactile::make_layout(16, 4, 4, 1.0);
  tactile::RenderParams params = tactile::render_params_from_config(Config::defaults());
  params.resolution = 16;
  const simworld::FingerModel finger = default_models().finger;

  std::vector<RolloutLog> logs;
  for (int k = 0; k < 3; ++k) {
    RolloutLog log;
    const int n = 16;
    const double rate = 0.015 + 0.01 * k;  // contact drift per frame
    log.frames.resize(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
      const double u = 0.30 + rate * i;
      const tactile::ActiveContact c{u, 0.004,
                                     finger.compliance_profile(u) / finger.compliance_base};
      log.rendered.push_back(tactile::render({c}, layout, params));
      FrameRecord& fr = log.frames[static_cast<size_t>(i)];
      fr.t = i / 60.0;
      fr.ee_pose = Vec6::Zero();
      fr.ee_pose[1] = 0.002 * (rate / 0.015) * i;
      fr.u_measured = u;
      fr.in_contact = true;
    }
    logs.push_back(std::move(log));
  }

  ImageTfmConfig cfg = tiny_image_cfg(3, 3);
  TfmTrainConfig train;
  train.epochs = 60;
  train.batch = 4;
  train.lr = 1.0;
  train.window_stride = 1;
  train.val_fraction = 0.34;
  train.teacher_forcing_fraction = 0.34;
  train.seed = 5;

  TfmTrainReport report;
  train_image_tfm(logs, cfg, train, &report);
  CHECK(report.train_loss.back() < report.train_loss.front());
}

TEST_CASE("trainers validate their datasets") {
  StateTfmConfig cfg;
  cfg.context = 4;
  cfg.horizon = 4;
  TfmTrainConfig train;
  train.epochs = 1;

  const std::vector<RolloutLog> empty;
  CHECK_THROWS_AS(train_state_tfm(empty, cfg, train), ValidationError);

  const std::vector<RolloutLog> one = drift_logs(1, 30);
  CHECK_THROWS_AS(train_state_tfm(one, cfg, train), ValidationError);

  // Frames at the wrong resolution for the image model.
  const tactile::MarkerLayout layout = tactile::make_layout(32, 4, 4, 1.5);
  const std::vector<RolloutLog> logs = static_logs(2, 10, tactile::rest_frame(layout));
  const ImageTfmConfig icfg = tiny_image_cfg(3, 3);  // expects 16 px
  CHECK_THROWS_AS(train_image_tfm(logs, icfg, train), ValidationError);
}

TEST_CASE("state training reports divergence instead of emitting NaNs") {
  const std::vector<RolloutLog> logs = drift_logs(4, 30);
  StateTfmConfig cfg;
  cfg.context = 4;
  cfg.horizon = 4;
  TfmTrainConfig train;
  train.epochs = 10;
  train.lr = 1e14;  // guaranteed blow-up
  CHECK_THROWS_AS(train_state_tfm(logs, cfg, train), std::runtime_error);
}

TEST_CASE("forecast evaluation rejects horizon-breaking predictors") {
  struct Short : Predictor {
    std::string name() const override { return "short"; }
    ForecastResult predict(const PredictorInput&) override {
      ForecastResult r;
      r.s_hat = {0.5};
      return r;
    }
  } bad;
  const std::vector<PushWindow> windows = extract_windows(drift_logs(1, 20), 4, 4, 4, false);
  REQUIRE_FALSE(windows.empty());
  CHECK_THROWS_AS(evaluate_forecasts(bad, windows, 4, 4), ValidationError);
}

TEST_CASE("state checkpoints round-trip") {
  const PushSet& set = trained_push_set();
  const std::string path = "/tmp/stempush_state_tfm_test.ckpt";
  StateTfm model = set.model;
  save_state_tfm(path, 42, model);
  const StateTfm loaded = load_state_tfm(path, 42, set.cfg);

  CHECK(loaded.action_norm.data == model.action_norm.data);
  const std::vector<PushWindow> windows =
      extract_windows(set.logs, set.cfg.context, set.cfg.horizon, 20, false);
  REQUIRE_FALSE(windows.empty());
  const PushWindow& w = windows.front();
  const nn::Tensor x = encode_state_input(
      set.cfg, std::vector<double>(w.s.begin(), w.s.begin() + set.cfg.context),
      std::vector<Vec6>(w.poses.begin(), w.poses.begin() + set.cfg.context),
      std::vector<Vec6>(w.poses.begin() + set.cfg.context, w.poses.end()), loaded.action_norm);
  CHECK(loaded.forward(x).data == model.forward(x).data);

  CHECK_THROWS_AS(load_state_tfm(path, 43, set.cfg), ValidationError);
  std::remove(path.c_str());
}

TEST_CASE("image checkpoints round-trip") {
  Rng rng(12);
  const ImageTfmConfig cfg = tiny_image_cfg(2, 2);
  ImageTfm model(cfg, rng);
  for (double& v : model.action_norm.data) v = 0.01;

  const std::string path = "/tmp/stempush_image_tfm_test.ckpt";
  save_image_tfm(path, 7, model);
  const ImageTfm loaded = load_image_tfm(path, 7, cfg);
  CHECK(loaded.action_norm.data == model.action_norm.data);

  std::vector<TactileFrame> context;
  for (int i = 0; i < 2; ++i) context.push_back(noise_frame(16, rng));
  const std::vector<Vec6> poses(2, Vec6::Zero());
  const std::vector<Vec6> planned(2, Vec6::Zero());
  const std::vector<TactileFrame> a = rollout_image_tfm(model, context, poses, planned);
  const std::vector<TactileFrame> b = rollout_image_tfm(loaded, context, poses, planned);
  CHECK(a[0].pixels == b[0].pixels);
  CHECK(a[1].pixels == b[1].pixels);

  CHECK_THROWS_AS(load_image_tfm(path, 8, cfg), ValidationError);
  std::remove(path.c_str());
}

TEST_CASE("predictors without models refuse to run") {
  StateTfmPredictor state(nullptr);
  CHECK_FALSE(state.ready());
  PredictorInput in;
  in.s = {0.5, 0.5};
  CHECK_THROWS_AS(state.predict(in), ValidationError);

  ImageTfmPredictor image(nullptr, nullptr);
  CHECK_FALSE(image.ready());
  CHECK_THROWS_AS(image.predict(in), ValidationError);
}
