#include "stempush/control/residual.hpp"

#include "stempush/strfmt.hpp"

#include <cmath>

namespace stempush::control {

GainSchedule uniform_gains(int horizon, double kp, double kd) {
  if (horizon <= 0) throw ValidationError("gains: horizon must be positive");
  if (kp < 0.0 || kd < 0.0) throw ValidationError("gains: kp and kd must be >= 0");
  GainSchedule g;
  g.kp.assign(static_cast<size_t>(horizon), kp);
  g.kd.assign(static_cast<size_t>(horizon), kd);
  return g;
}

ErrorHorizon error_horizon(const std::vector<double>& s_hat, double s_t, const ErrorHorizon* prev,
                           double tick_s) {
  if (!(s_t >= 0.0 && s_t <= 1.0)) {
    throw ValidationError("error_horizon: s_t must lie in [0,1], got " + fmt_double(s_t));
  }
  if (!(tick_s > 0.0)) throw ValidationError("error_horizon: tick_s must be positive");
  ErrorHorizon out;
  out.e.resize(s_hat.size());
  out.e_dot.assign(s_hat.size(), 0.0);
  for (size_t i = 0; i < s_hat.size(); ++i) out.e[i] = s_hat[i] - s_t;
  if (prev != nullptr && prev->e.size() == out.e.size()) {
    for (size_t i = 0; i < out.e.size(); ++i) out.e_dot[i] = (out.e[i] - prev->e[i]) / tick_s;
  }
  return out;
}

ResidualAction residual_action(const ErrorHorizon& err, const GainSchedule& gains, double limit) {
  if (err.e.size() != err.e_dot.size() || err.e.size() != gains.kp.size() ||
      gains.kp.size() != gains.kd.size()) {
    throw ValidationError("residual_action: horizon length mismatch (e " +
                          fmt_int(static_cast<int64_t>(err.e.size())) + ", e_dot " +
                          fmt_int(static_cast<int64_t>(err.e_dot.size())) + ", kp " +
                          fmt_int(static_cast<int64_t>(gains.kp.size())) + ", kd " +
                          fmt_int(static_cast<int64_t>(gains.kd.size())) + ")");
  }
  if (!(limit > 0.0)) throw ValidationError("residual_action: saturation limit must be positive");
  double sum = 0.0;
  for (size_t i = 0; i < err.e.size(); ++i) {
    sum += gains.kp[i] * err.e[i] + gains.kd[i] * err.e_dot[i];
  }
  ResidualAction out;
  out.value = -sum + 0.0;  // + 0.0 folds -0 into 0 so logs stay sign-stable
  if (std::abs(out.value) > limit) {
    out.value = std::copysign(limit, out.value);
    out.saturated = true;
  }
  return out;
}

ControlCommand compose_command(const Vec6& a_ref, const ResidualAction& res, const Vec3& axis,
                               const Vec3& ee_position, const Vec3& contact_point) {
  ControlCommand cmd;
  cmd.a_ref = a_ref;
  cmd.a_res = res.value;
  cmd.saturated = res.saturated;
  cmd.contact_axis = axis;
  cmd.total = a_ref;
  // Rotation about the line through contact_point with direction axis: the
  // end-effector origin orbits that line.
  cmd.total.head<3>() += res.value * axis.cross(ee_position - contact_point);
  cmd.total.tail<3>() += res.value * axis;
  return cmd;
}

}  // namespace stempush::control
