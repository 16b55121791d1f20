#pragma once

#include "stempush/config.hpp"
#include "stempush/rng.hpp"
#include "stempush/types.hpp"

#include <vector>

namespace stempush::simworld {

// Flexible stem: rigid link hanging from a fixed anchor on a 2-DOF nonlinear
// torsional spring (restoring torque (k1 + k3*|theta|^2)*theta), with the
// fruit represented as a point mass at the tip.
struct StemModel {
  Vec3 anchor = Vec3(0.45, 0.0, 0.55);       // m, robot-base frame
  Vec3 rest_direction = Vec3(0.0, 0.0, -1.0);  // unit, anchor -> tip at rest
  double length = 0.35;      // m
  double tip_mass = 0.025;   // kg
  double k1 = 4.7;           // N*m/rad
  double k3 = 60.0;          // N*m/rad^3
  double damping = 0.03;     // N*m*s/rad
  double radius = 0.0015;    // m

  double inertia() const { return tip_mass * length * length; }
  void validate() const;
};

// Half-conic compliant finger mounted on the end effector. u parametrizes the
// axis: 0 at the base (camera lens), 1 at the tip. The membrane gets thinner,
// stiffer, and less deformable toward the tip; pressing past the local
// deformation limit engages a much stiffer regime.
struct FingerModel {
  double length = 0.06;            // m, axial extent
  double radius_base = 0.022;      // m at u=0
  double radius_tip = 0.01;        // m at u=1
  double compliance_base = 4e-3;   // m/N at u=0
  double compliance_tip = 1e-3;    // m/N at u=1
  double deform_limit_base = 0.024;  // m at u=0
  double deform_limit_tip = 0.015;   // m at u=1
  double stiffen_factor = 20.0;    // incremental stiffness ratio past the limit
  // Attachment survives micro-separation up to this depth at zero force, so a
  // grazing touch does not churn made/lost events every tick.
  double contact_hysteresis = 2e-4;  // m
  Pose mount_pose_offset;          // finger base relative to the end effector

  double radius_profile(double u) const;
  double compliance_profile(double u) const;
  double deform_limit(double u) const;
  // Normal force for a penetration depth at axial coordinate u.
  double normal_force(double penetration, double u) const;
  void validate() const;
};

struct Models {
  StemModel stem;                     // the target stem (ground truth s tracks it)
  std::vector<StemModel> distractors; // cluster mode: other stems near the target
  FingerModel finger;
  double mu_s = 0.6;     // static friction along the finger axis
  double mu_k = 0.3;     // kinetic friction along the finger axis
  double gravity = 9.81; // m/s^2

  void validate() const;
};

Models models_from_config(const Config& cfg);

// One target plus n-1 distractor stems with jittered anchors and stiffness.
// Anchors are re-drawn until every pair is at least spacing/2 apart.
Models make_cluster(const Models& base, int n, double spacing, double stiffness_jitter, Rng& rng);

}  // namespace stempush::simworld
