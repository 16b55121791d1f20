#include "stempush/simworld/scenario.hpp"

#include <cmath>

namespace stempush::simworld {

ScenarioSpec scenario_from_config(const Config& cfg) {
  ScenarioSpec s;
  s.yaw = cfg.num("scenario.yaw_rad");
  s.speed = cfg.num("scenario.speed_mps");
  s.accel = cfg.num("scenario.accel_mps2");
  s.approach = cfg.num("scenario.approach_m");
  s.push = cfg.num("scenario.push_m");
  s.settle = cfg.num("scenario.settle_s");
  s.contact_height = cfg.num("scenario.contact_height_m");
  s.arc_rise = cfg.num("scenario.arc_rise_m");
  s.arc_subtend = cfg.num("scenario.arc_subtend_rad");
  return s;
}

Scenario build_scenario(const Models& models, const ScenarioSpec& spec) {
  models.validate();
  if (!(spec.u0 > 0.0 && spec.u0 < 1.0)) {
    throw ValidationError("scenario: u0 must lie strictly inside (0,1)");
  }
  if (std::abs(spec.yaw) >= 1.2) {
    throw ValidationError("scenario: |yaw| must stay below 1.2 rad");
  }
  if (!(spec.contact_height > 0.0) || !(spec.approach > 0.0) || !(spec.push > 0.0)) {
    throw ValidationError("scenario: approach, push, contact_height must be positive");
  }

  const StemModel& stem = models.stem;
  // Point on the resting stem at the requested contact height.
  if (std::abs(stem.rest_direction.z()) < 1e-9) {
    throw ValidationError("scenario: stem rest direction must have a vertical component");
  }
  const double lam = (spec.contact_height - stem.anchor.z()) / stem.rest_direction.z();
  if (lam < 0.05 * stem.length || lam > 0.95 * stem.length) {
    throw ValidationError("scenario: contact height misses the stem span");
  }
  const Vec3 stem_pt = stem.anchor + lam * stem.rest_direction;

  // Horizontal finger axis, yawed about vertical; the finger approaches the
  // stem along +y, touching first along the in-plane normal n.
  const Vec3 dir(std::cos(spec.yaw), std::sin(spec.yaw), 0.0);
  const Vec3 n(-std::sin(spec.yaw), std::cos(spec.yaw), 0.0);
  const double touch_dist = models.finger.radius_profile(spec.u0) + stem.radius;

  const Vec3 base_at_touch = stem_pt - touch_dist * n - spec.u0 * models.finger.length * dir;
  const Vec3 p0 = base_at_touch - spec.approach * Vec3::UnitY();
  const Vec3 pf = p0 + (spec.approach + spec.push) * Vec3::UnitY() +
                  (spec.kind == control::TrajectoryKind::arc ? spec.arc_rise : 0.0) * Vec3::UnitZ();

  Scenario out;
  out.trajectory.kind = spec.kind;
  out.trajectory.start.position = p0;
  out.trajectory.start.euler = Vec3(0.0, 0.0, spec.yaw);
  out.trajectory.goal.position = pf;
  out.trajectory.goal.euler = Vec3(0.0, 0.0, spec.yaw);
  out.trajectory.v_max = spec.speed;
  out.trajectory.a_max = spec.accel;
  out.trajectory.arc_subtend_rad = spec.arc_subtend;
  out.trajectory.validate();

  out.initial.ee_pose = out.trajectory.start;
  out.initial.time = 0.0;
  out.duration = control::trajectory_duration(out.trajectory) + spec.settle;
  return out;
}

}  // namespace stempush::simworld
