#include "stempush/forecast/predictor.hpp"

#include "stempush/strfmt.hpp"

#include <algorithm>

namespace stempush::forecast {

void PredictorConfig::validate() const {
  if (context < 2) throw ValidationError("predictor: context must be at least 2 frames");
  if (horizon < 1) throw ValidationError("predictor: horizon must be at least 1 frame");
  if (!(frame_hz > 0.0)) throw ValidationError("predictor: frame rate must be positive");
}

PredictorConfig predictor_config_from_config(const Config& cfg) {
  PredictorConfig p;
  p.context = static_cast<int>(cfg.integer("forecast.context"));
  p.horizon = static_cast<int>(cfg.integer("forecast.horizon"));
  p.frame_hz = cfg.num("sim.frame_hz");
  p.validate();
  return p;
}

ForecastResult PersistencePredictor::predict(const PredictorInput& in) {
  if (in.s.empty()) throw ValidationError("persistence predictor: empty context");
  ForecastResult out;
  out.backend = name();
  out.s_hat.assign(static_cast<size_t>(cfg_.horizon), std::clamp(in.s.back(), 0.0, 1.0));
  return out;
}

PhysicsOracle::PhysicsOracle(const PredictorConfig& cfg, double physics_dt, double duration_s)
    : cfg_(cfg), physics_dt_(physics_dt) {
  cfg_.validate();
  // Pad the schedule so forecasts near the end of the run stay well defined.
  const double padded = duration_s + (cfg_.horizon + 2) / cfg_.frame_hz;
  sched_ = simworld::make_frame_schedule(padded, physics_dt, cfg_.frame_hz);
}

void PhysicsOracle::observe(const simworld::FrameObs& obs) {
  if (obs.world == nullptr || obs.models == nullptr)
    throw ValidationError("physics oracle: frame observation carries no world snapshot");
  snapshot_ = *obs.world;
  models_ = *obs.models;
  frame_index_ = obs.frame_index;
}

ForecastResult PhysicsOracle::predict(const PredictorInput& in) {
  if (!snapshot_.has_value())
    throw ValidationError("physics oracle: predict called before any observation");
  if (in.planned_twists.size() != static_cast<size_t>(cfg_.horizon))
    throw ValidationError("physics oracle: got " +
                          fmt_int(static_cast<long long>(in.planned_twists.size())) +
                          " planned twists for a horizon of " + fmt_int(cfg_.horizon));
  if (frame_index_ + cfg_.horizon >= static_cast<int>(sched_.frame_ticks.size()))
    throw ValidationError("physics oracle: forecast extends past the padded schedule");

  simworld::WorldState state = *snapshot_;
  Rng rng(0);  // the step function is noiseless; this is never consulted
  ForecastResult out;
  out.backend = name();
  out.s_hat.reserve(static_cast<size_t>(cfg_.horizon));
  for (int i = 0; i < cfg_.horizon; ++i) {
    const int from = sched_.frame_ticks[static_cast<size_t>(frame_index_ + i)];
    const int to = sched_.frame_ticks[static_cast<size_t>(frame_index_ + i + 1)];
    for (int tick = from; tick < to; ++tick)
      state = simworld::step(state, in.planned_twists[static_cast<size_t>(i)], physics_dt_,
                             models_, rng)
                  .next;
    // Off the finger the stem is wherever it was last seen; clamping keeps the
    // forecast inside the contract's range.
    const double s = state.stem.u_att.value_or(out.s_hat.empty()
                                                   ? (in.s.empty() ? 0.5 : in.s.back())
                                                   : out.s_hat.back());
    out.s_hat.push_back(std::clamp(s, 0.0, 1.0));
  }
  return out;
}

}  // namespace stempush::forecast
