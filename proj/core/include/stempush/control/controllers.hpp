#pragma once

#include "stempush/control/residual.hpp"
#include "stempush/control/trajectory.hpp"
#include "stempush/simworld/world.hpp"

namespace stempush::control {

// Reference-only command at time t (shared by every controller's fallback).
ControlCommand tick_open_loop(const TrajectorySpec& spec, double t);

// Plays the reference trajectory with no feedback. Baseline command source.
class OpenLoopController : public simworld::CommandSource {
 public:
  explicit OpenLoopController(TrajectorySpec spec) : spec_(std::move(spec)) { spec_.validate(); }
  ControlCommand tick(const simworld::FrameObs& obs) override;

 private:
  TrajectorySpec spec_;
};

}  // namespace stempush::control
