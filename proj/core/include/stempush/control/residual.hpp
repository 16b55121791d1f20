#pragma once

#include "stempush/types.hpp"

#include <vector>

namespace stempush::control {

// Per-horizon-index feedback gains, units (rad/s) per unit normalized
// contact-location displacement.
struct GainSchedule {
  std::vector<double> kp;
  std::vector<double> kd;
};

GainSchedule uniform_gains(int horizon, double kp, double kd);

// Horizon error e_i = s_hat_i - s_t and its tick-to-tick finite difference.
struct ErrorHorizon {
  std::vector<double> e;
  std::vector<double> e_dot;
};

// prev may be null (or of mismatched length, e.g. after contact was regained):
// the rate term is then zero.
ErrorHorizon error_horizon(const std::vector<double>& s_hat, double s_t, const ErrorHorizon* prev,
                           double tick_s);

struct ResidualAction {
  double value = 0.0;  // rad/s about the contact-line axis
  bool saturated = false;
};

// Negated gain-weighted sum over the horizon, then clamped to [-limit, limit].
ResidualAction residual_action(const ErrorHorizon& err, const GainSchedule& gains, double limit);

// One control-tick output: reference twist, the scalar residual, and their
// composition as a single end-effector twist. The residual spins the finger
// about the contact-line axis through the contact point, so it contributes
// both an angular rate and the matching linear rate at the end-effector
// origin; the contact point itself gains no velocity from the residual.
struct ControlCommand {
  Vec6 a_ref = Vec6::Zero();
  double a_res = 0.0;
  Vec3 contact_axis = Vec3::Zero();
  Vec6 total = Vec6::Zero();
  bool saturated = false;
  bool degraded = false;  // fell back to the reference (predictor/contact unavailable)
  bool finished = false;  // reference trajectory exhausted
};

ControlCommand compose_command(const Vec6& a_ref, const ResidualAction& res, const Vec3& axis,
                               const Vec3& ee_position, const Vec3& contact_point);

}  // namespace stempush::control
