#include "stempush/control/controllers.hpp"

namespace stempush::control {

ControlCommand tick_open_loop(const TrajectorySpec& spec, double t) {
  const TwistSample sample = reference_twist(spec, t);
  ControlCommand cmd;
  cmd.a_ref = sample.twist;
  cmd.total = sample.twist;
  cmd.finished = !sample.active && t > 0.0;
  return cmd;
}

ControlCommand OpenLoopController::tick(const simworld::FrameObs& obs) {
  return tick_open_loop(spec_, obs.t);
}

}  // namespace stempush::control
