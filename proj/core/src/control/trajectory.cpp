#include "stempush/control/trajectory.hpp"

#include "stempush/strfmt.hpp"

#include <cmath>

namespace stempush::control {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Piecewise description of the scalar bang-bang speed profile.
struct BangBang {
  double dist = 0.0;     // total path length
  double t_acc = 0.0;    // acceleration (= deceleration) phase length
  double t_cruise = 0.0; // cruise phase length (0 for triangular profiles)
  double peak = 0.0;     // attained peak speed
  double duration() const { return 2.0 * t_acc + t_cruise; }
};

BangBang bang_bang_profile(const TrajectorySpec& spec) {
  BangBang p;
  p.dist = (spec.goal.position - spec.start.position).norm();
  const double uncapped_peak = std::sqrt(p.dist * spec.a_max);
  if (uncapped_peak <= spec.v_max) {
    p.peak = uncapped_peak;
    p.t_acc = std::sqrt(p.dist / spec.a_max);
  } else {
    p.peak = spec.v_max;
    p.t_acc = spec.v_max / spec.a_max;
    p.t_cruise = (p.dist - spec.v_max * spec.v_max / spec.a_max) / spec.v_max;
  }
  return p;
}

double bang_bang_speed(const BangBang& p, const TrajectorySpec& spec, double t) {
  if (t <= p.t_acc) return spec.a_max * t;
  if (t <= p.t_acc + p.t_cruise) return p.peak;
  return spec.a_max * (p.duration() - t);
}

double bang_bang_distance(const BangBang& p, const TrajectorySpec& spec, double t) {
  if (t <= p.t_acc) return 0.5 * spec.a_max * t * t;
  const double d_acc = 0.5 * spec.a_max * p.t_acc * p.t_acc;
  if (t <= p.t_acc + p.t_cruise) return d_acc + p.peak * (t - p.t_acc);
  const double remain = p.duration() - t;
  return p.dist - 0.5 * spec.a_max * remain * remain;
}

Vec3 euler_delta(const Pose& start, const Pose& goal) {
  Vec3 d;
  for (int i = 0; i < 3; ++i) d[i] = wrap_angle(goal.euler[i] - start.euler[i]);
  return d;
}

Vec3 rodrigues(const Vec3& v, const Vec3& axis, double angle) {
  const double c = std::cos(angle), s = std::sin(angle);
  return v * c + axis.cross(v) * s + axis * (axis.dot(v) * (1.0 - c));
}

}  // namespace

void TrajectorySpec::validate() const {
  if (!(v_max > 0.0) || !(a_max > 0.0)) {
    throw ValidationError("trajectory: v_max and a_max must be positive");
  }
  if (!start.finite() || !goal.finite()) {
    throw ValidationError("trajectory: start/goal pose must be finite");
  }
  const double dist = (goal.position - start.position).norm();
  if (!(dist > 0.0)) {
    throw ValidationError("trajectory: start and goal positions coincide");
  }
  if (kind == TrajectoryKind::arc) {
    if (!(goal.position.z() > start.position.z())) {
      throw ValidationError("trajectory: arc goal must end above the start (goal z <= start z)");
    }
    if (!(arc_subtend_rad > 0.0) || !(arc_subtend_rad < kPi)) {
      throw ValidationError("trajectory: arc_subtend_rad must lie in (0, pi)");
    }
  }
}

ArcGeometry arc_geometry(const TrajectorySpec& spec) {
  spec.validate();
  if (spec.kind != TrajectoryKind::arc) {
    throw ValidationError("trajectory: arc_geometry requires an arc spec");
  }
  const Vec3 p0 = spec.start.position, pf = spec.goal.position;
  const Vec3 chord = pf - p0;
  const double len = chord.norm();
  const Vec3 dir = chord / len;

  // In-plane normal to the chord with positive vertical component: the arc
  // bulges toward +up_n. A vertical chord leaves the plane free; pick x.
  Vec3 up_n = Vec3::UnitZ() - Vec3::UnitZ().dot(dir) * dir;
  if (up_n.norm() < 1e-9) up_n = Vec3::UnitX() - Vec3::UnitX().dot(dir) * dir;
  up_n.normalize();

  ArcGeometry g;
  g.subtend = spec.arc_subtend_rad;
  g.radius = len / (2.0 * std::sin(0.5 * g.subtend));
  g.center = 0.5 * (p0 + pf) - g.radius * std::cos(0.5 * g.subtend) * up_n;
  g.axis = (p0 - g.center).cross(pf - g.center).normalized();
  return g;
}

double trajectory_duration(const TrajectorySpec& spec) {
  spec.validate();
  if (spec.kind == TrajectoryKind::linear_bang_bang) {
    return bang_bang_profile(spec).duration();
  }
  const ArcGeometry g = arc_geometry(spec);
  return g.radius * g.subtend / spec.v_max;
}

TwistSample reference_twist(const TrajectorySpec& spec, double t) {
  spec.validate();
  const double duration = trajectory_duration(spec);
  TwistSample out;
  if (t < 0.0 || t > duration) return out;
  out.active = true;

  const Vec3 dq = euler_delta(spec.start, spec.goal);
  if (spec.kind == TrajectoryKind::linear_bang_bang) {
    const BangBang p = bang_bang_profile(spec);
    const double speed = bang_bang_speed(p, spec, t);
    const Vec3 dir = (spec.goal.position - spec.start.position) / p.dist;
    out.twist.head<3>() = speed * dir;
    // Orientation progresses with path fraction so it also comes to rest.
    out.twist.tail<3>() = dq * (speed / p.dist);
    return out;
  }

  const ArcGeometry g = arc_geometry(spec);
  const double rate = spec.v_max / g.radius;  // rad/s along the circle
  const Vec3 radial = rodrigues(spec.start.position - g.center, g.axis, rate * t);
  out.twist.head<3>() = spec.v_max * g.axis.cross(radial).normalized();
  out.twist.tail<3>() = dq / duration;
  return out;
}

Pose reference_pose(const TrajectorySpec& spec, double t) {
  spec.validate();
  const double duration = trajectory_duration(spec);
  t = std::min(std::max(t, 0.0), duration);

  const Vec3 dq = euler_delta(spec.start, spec.goal);
  Pose pose;
  if (spec.kind == TrajectoryKind::linear_bang_bang) {
    const BangBang p = bang_bang_profile(spec);
    const double s = bang_bang_distance(p, spec, t);
    const double frac = s / p.dist;
    pose.position = spec.start.position + frac * (spec.goal.position - spec.start.position);
    for (int i = 0; i < 3; ++i) pose.euler[i] = wrap_angle(spec.start.euler[i] + frac * dq[i]);
    return pose;
  }

  const ArcGeometry g = arc_geometry(spec);
  const double rate = spec.v_max / g.radius;
  pose.position = g.center + rodrigues(spec.start.position - g.center, g.axis, rate * t);
  const double frac = duration > 0.0 ? t / duration : 1.0;
  for (int i = 0; i < 3; ++i) pose.euler[i] = wrap_angle(spec.start.euler[i] + frac * dq[i]);
  return pose;
}

}  // namespace stempush::control
