#pragma once

#include "stempush/types.hpp"

namespace stempush::control {

enum class TrajectoryKind { linear_bang_bang, arc };

// Minimum-time reference trajectory between two end-effector poses.
// linear_bang_bang: straight line, maximal acceleration then maximal
// deceleration (cruise phase inserted when v_max binds). arc: constant-speed
// traversal of a circular arc whose plane contains the chord and the world
// vertical, bulging upward; the goal must sit above the start.
struct TrajectorySpec {
  TrajectoryKind kind = TrajectoryKind::linear_bang_bang;
  Pose start;
  Pose goal;
  double v_max = 0.02;            // m/s
  double a_max = 0.08;            // m/s^2
  double arc_subtend_rad = 1.0472;  // arcs: central angle of the circular path

  void validate() const;  // throws ValidationError
};

// Circle underlying an arc spec: position(t) = center + rot(axis, rate*t) * (p0 - center).
struct ArcGeometry {
  Vec3 center = Vec3::Zero();
  Vec3 axis = Vec3::UnitZ();  // unit rotation axis, start-to-goal positive
  double radius = 0.0;        // m
  double subtend = 0.0;       // rad
};

ArcGeometry arc_geometry(const TrajectorySpec& spec);

double trajectory_duration(const TrajectorySpec& spec);

struct TwistSample {
  Vec6 twist = Vec6::Zero();  // [linear m/s; angular rad/s]
  bool active = false;        // false outside [0, duration]
};

// Reference twist at time t; zero twist with active=false outside the
// trajectory's time span.
TwistSample reference_twist(const TrajectorySpec& spec, double t);

// Closed-form pose at time t (t clamped to [0, duration]).
Pose reference_pose(const TrajectorySpec& spec, double t);

}  // namespace stempush::control
