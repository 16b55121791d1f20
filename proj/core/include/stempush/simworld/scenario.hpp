#pragma once

#include "stempush/config.hpp"
#include "stempush/control/trajectory.hpp"
#include "stempush/simworld/world.hpp"

namespace stempush::simworld {

// A single push task: the finger (yawed by `yaw` about vertical, axis
// horizontal) starts `approach` metres short of the stem and translates along
// +y so that first contact lands at axial coordinate u0, then keeps pushing
// `push` metres and settles.
struct ScenarioSpec {
  double u0 = 0.5;    // intended first-contact coordinate on the finger axis
  double yaw = 0.8;   // rad about world z; sign sets the axial drift direction
  double speed = 0.02;    // m/s
  double accel = 0.08;    // m/s^2
  double approach = 0.03; // m of free travel before first touch
  double push = 0.05;     // m of travel past first touch
  double settle = 0.5;    // s appended after the trajectory ends
  double contact_height = 0.25;  // m, world z of the contact point
  control::TrajectoryKind kind = control::TrajectoryKind::linear_bang_bang;
  double arc_rise = 0.02;        // m of extra height at the goal (arc only)
  double arc_subtend = 1.0471975511965976;  // rad (arc only)
};

// Scenario fields that come straight from the config tree (u0/yaw/kind are
// per-task choices left at their defaults).
ScenarioSpec scenario_from_config(const Config& cfg);

struct Scenario {
  WorldState initial;
  control::TrajectorySpec trajectory;
  double duration = 0.0;  // trajectory duration + settle
};

Scenario build_scenario(const Models& models, const ScenarioSpec& spec);

}  // namespace stempush::simworld
