#include <doctest.h>

#include "stempush/control/residual.hpp"
#include "stempush/control/trajectory.hpp"
#include "stempush/rng.hpp"

#include <cmath>

using namespace stempush;
using namespace stempush::control;

namespace {

TrajectorySpec line_spec(const Vec3& p0, const Vec3& pf, double v, double a) {
  TrajectorySpec s;
  s.kind = TrajectoryKind::linear_bang_bang;
  s.start.position = p0;
  s.goal.position = pf;
  s.v_max = v;
  s.a_max = a;
  return s;
}

// Independent check: integrate the published twist with a fine midpoint rule
// and compare against the closed-form pose.
Vec3 integrate_linear(const TrajectorySpec& spec, double until, double dt = 1e-5) {
  Vec3 p = spec.start.position;
  const int n = std::max(1, static_cast<int>(std::lround(until / dt)));
  const double h = until / n;
  for (int i = 0; i < n; ++i) {
    p += reference_twist(spec, (i + 0.5) * h).twist.head<3>() * h;
  }
  return p;
}

}  // namespace

TEST_CASE("bang-bang durations match closed-form kinematics") {
  // v_max binds: accelerate 0.25 s, cruise, decelerate -> 0.2/0.2 + 0.2/0.8.
  auto trapezoid = line_spec({0, 0, 0}, {0.2, 0, 0}, 0.2, 0.8);
  CHECK(trajectory_duration(trapezoid) == doctest::Approx(1.25).epsilon(1e-12));

  // Peak sqrt(0.05*0.8) = 0.2 just reaches v_max: triangular profile.
  auto triangle = line_spec({0, 0, 0}, {0, 0.05, 0}, 0.2, 0.8);
  CHECK(trajectory_duration(triangle) == doctest::Approx(2.0 * std::sqrt(0.05 / 0.8)).epsilon(1e-12));

  for (const auto& spec : {trapezoid, triangle}) {
    const double dur = trajectory_duration(spec);
    // Starts and ends at rest, with the goal reached exactly at the end.
    CHECK(reference_twist(spec, 0.0).twist.norm() == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(reference_twist(spec, dur).twist.norm() == doctest::Approx(0.0).epsilon(1e-12));
    CHECK((reference_pose(spec, dur).position - spec.goal.position).norm() < 1e-12);
    // Speed never exceeds v_max; profile integrates to the travelled distance.
    double peak = 0.0;
    for (int i = 0; i <= 200; ++i) {
      const double t = dur * i / 200.0;
      peak = std::max(peak, reference_twist(spec, t).twist.head<3>().norm());
      const Vec3 integrated = integrate_linear(spec, t, dur / 5e4);
      CHECK((integrated - reference_pose(spec, t).position).norm() < 1e-6);
    }
    CHECK(peak <= spec.v_max + 1e-12);
  }
}

TEST_CASE("reference twist outside the trajectory is zero and flagged") {
  auto spec = line_spec({0, 0, 0}, {0.1, 0, 0}, 0.05, 0.1);
  const double dur = trajectory_duration(spec);
  CHECK(reference_twist(spec, 0.5 * dur).active);
  const auto after = reference_twist(spec, dur + 1e-6);
  CHECK_FALSE(after.active);
  CHECK(after.twist.norm() == 0.0);
  CHECK_FALSE(reference_twist(spec, -1e-6).active);
}

TEST_CASE("bang-bang orientation interpolates start to goal") {
  auto spec = line_spec({0, 0, 0}, {0.2, 0, 0}, 0.2, 0.8);
  spec.start.euler = Vec3(0, 0, 0.3);
  spec.goal.euler = Vec3(0, 0, -0.5);
  const double dur = trajectory_duration(spec);
  CHECK(reference_pose(spec, dur).euler.z() == doctest::Approx(-0.5).epsilon(1e-12));
  CHECK(reference_pose(spec, 0.0).euler.z() == doctest::Approx(0.3).epsilon(1e-12));
  // Angular rate is zero at the rest boundaries too.
  CHECK(reference_twist(spec, 0.0).twist.tail<3>().norm() == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("arc samples stay on the analytic circle at constant speed") {
  Rng rng(42);
  for (int trial = 0; trial < 20; ++trial) {
    TrajectorySpec spec;
    spec.kind = TrajectoryKind::arc;
    spec.start.position = Vec3(rng.uniform(-0.2, 0.2), rng.uniform(-0.2, 0.2), rng.uniform(0.1, 0.3));
    spec.goal.position = spec.start.position +
                         Vec3(rng.uniform(-0.1, 0.1), rng.uniform(-0.1, 0.1), rng.uniform(0.01, 0.08));
    spec.v_max = rng.uniform(0.01, 0.05);
    spec.arc_subtend_rad = rng.uniform(0.3, 2.5);

    const ArcGeometry g = arc_geometry(spec);
    const double dur = trajectory_duration(spec);
    CHECK(dur == doctest::Approx(g.radius * g.subtend / spec.v_max).epsilon(1e-12));
    // Endpoints sit on the circle and the path interpolates them.
    CHECK((reference_pose(spec, 0.0).position - spec.start.position).norm() < 1e-9);
    CHECK((reference_pose(spec, dur).position - spec.goal.position).norm() < 1e-9);
    double z_min = 1e9;
    for (int i = 0; i <= 64; ++i) {
      const double t = dur * i / 64.0;
      const Vec3 p = reference_pose(spec, t).position;
      CHECK(std::abs((p - g.center).norm() - g.radius) < 1e-9);   // on the circle
      CHECK(std::abs((p - g.center).dot(g.axis)) < 1e-9);         // in its plane
      CHECK(reference_twist(spec, t).twist.head<3>().norm() ==
            doctest::Approx(spec.v_max).epsilon(1e-9));           // constant speed
      z_min = std::min(z_min, p.z());
    }
    // Bulges upward: no sample dips below the lower endpoint.
    CHECK(z_min >= spec.start.position.z() - 1e-9);
  }
}

TEST_CASE("arc validation rejects descending goals and degenerate specs") {
  TrajectorySpec spec;
  spec.kind = TrajectoryKind::arc;
  spec.start.position = Vec3(0, 0, 0.2);
  spec.goal.position = Vec3(0.1, 0, 0.2);  // level, not above
  CHECK_THROWS_AS(trajectory_duration(spec), ValidationError);
  spec.goal.position = Vec3(0.1, 0, 0.25);
  CHECK_NOTHROW(trajectory_duration(spec));
  spec.arc_subtend_rad = 3.5;  // >= pi
  CHECK_THROWS_AS(trajectory_duration(spec), ValidationError);

  auto degenerate = line_spec({0, 0, 0}, {0, 0, 0}, 0.1, 0.1);
  CHECK_THROWS_AS(trajectory_duration(degenerate), ValidationError);
  auto bad_vel = line_spec({0, 0, 0}, {0.1, 0, 0}, 0.0, 0.1);
  CHECK_THROWS_AS(trajectory_duration(bad_vel), ValidationError);
}

TEST_CASE("error horizon arithmetic") {
  const auto zero = error_horizon({0.5, 0.5, 0.5}, 0.5, nullptr, 1.0 / 60.0);
  for (double v : zero.e) CHECK(v == 0.0);
  for (double v : zero.e_dot) CHECK(v == 0.0);

  const auto eh = error_horizon({0.6, 0.7}, 0.5, nullptr, 1.0 / 60.0);
  CHECK(eh.e[0] == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(eh.e[1] == doctest::Approx(0.2).epsilon(1e-12));
  CHECK(eh.e_dot[0] == 0.0);

  ErrorHorizon prev;
  prev.e = {0.1, 0.2};
  prev.e_dot = {0.0, 0.0};
  const auto next = error_horizon({0.7, 0.7}, 0.5, &prev, 1.0 / 60.0);
  CHECK(next.e_dot[0] == doctest::Approx(6.0).epsilon(1e-12));
  CHECK(next.e_dot[1] == doctest::Approx(0.0).epsilon(1e-12));

  // Length change (e.g. regained contact) falls back to zero rates.
  ErrorHorizon shorter;
  shorter.e = {0.1};
  shorter.e_dot = {0.0};
  const auto regained = error_horizon({0.7, 0.7}, 0.5, &shorter, 1.0 / 60.0);
  CHECK(regained.e_dot[0] == 0.0);

  CHECK_THROWS_AS(error_horizon({0.5}, 1.5, nullptr, 1.0 / 60.0), ValidationError);
  CHECK_THROWS_AS(error_horizon({0.5}, 0.5, nullptr, 0.0), ValidationError);
}

TEST_CASE("residual action is the literal negated gain-weighted sum") {
  ErrorHorizon zero;
  zero.e.assign(10, 0.0);
  zero.e_dot.assign(10, 0.0);
  const auto none = residual_action(zero, uniform_gains(10, 0.4, 0.02), 0.5);
  CHECK(none.value == 0.0);
  CHECK_FALSE(std::signbit(none.value));  // -0 never leaks into logs
  CHECK_FALSE(none.saturated);

  ErrorHorizon step;
  step.e.assign(10, 0.1);
  step.e_dot.assign(10, 0.0);
  const auto half = residual_action(step, uniform_gains(10, 0.5, 0.0), 0.5);
  CHECK(half.value == doctest::Approx(-0.5).epsilon(1e-12));
  CHECK_FALSE(half.saturated);

  Rng rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = rng.uniform_int(1, 16);
    ErrorHorizon err;
    GainSchedule gains;
    for (int i = 0; i < n; ++i) {
      err.e.push_back(rng.uniform(-0.5, 0.5));
      err.e_dot.push_back(rng.uniform(-3.0, 3.0));
      gains.kp.push_back(rng.uniform(0.0, 1.0));
      gains.kd.push_back(rng.uniform(0.0, 0.1));
    }
    // Independent re-summation.
    double expect = 0.0;
    for (int i = n - 1; i >= 0; --i) {
      expect -= gains.kp[static_cast<size_t>(i)] * err.e[static_cast<size_t>(i)] +
                gains.kd[static_cast<size_t>(i)] * err.e_dot[static_cast<size_t>(i)];
    }
    const auto res = residual_action(err, gains, 1e9);
    CHECK(res.value == doctest::Approx(expect).epsilon(1e-12));

    // Homogeneity in the gains, pre-saturation.
    GainSchedule doubled = gains;
    for (auto& v : doubled.kp) v *= 2.0;
    for (auto& v : doubled.kd) v *= 2.0;
    CHECK(residual_action(err, doubled, 1e9).value == doctest::Approx(2.0 * res.value).epsilon(1e-12));
  }
}

TEST_CASE("residual saturation clamps and flags") {
  ErrorHorizon err;
  err.e.assign(10, 0.5);
  err.e_dot.assign(10, 0.0);
  const auto res = residual_action(err, uniform_gains(10, 1.0, 0.0), 0.5);
  CHECK(res.value == -0.5);
  CHECK(res.saturated);
  for (auto& v : err.e) v = -0.5;
  const auto pos = residual_action(err, uniform_gains(10, 1.0, 0.0), 0.5);
  CHECK(pos.value == 0.5);
  CHECK(pos.saturated);

  ErrorHorizon mismatched;
  mismatched.e.assign(9, 0.0);
  mismatched.e_dot.assign(9, 0.0);
  CHECK_THROWS_AS(residual_action(mismatched, uniform_gains(10, 1.0, 0.0), 0.5), ValidationError);
}

TEST_CASE("composed command rotates about the contact line, not the wrist") {
  Vec6 a_ref;
  a_ref << 0.0, 0.02, 0.0, 0.0, 0.0, 0.0;
  const Vec3 axis(0.0, 0.0, -1.0);
  const Vec3 ee(0.40, 0.10, 0.25);
  const Vec3 contact(0.45, 0.13, 0.25);
  ResidualAction res;
  res.value = -0.3;
  const auto cmd = compose_command(a_ref, res, axis, ee, contact);

  CHECK(cmd.total.tail<3>().isApprox(Vec3(0, 0, 0.3), 1e-12));
  // Velocity induced at the contact point must be the reference alone: the
  // residual pivots the finger around that line.
  const Vec3 v_contact = cmd.total.head<3>() + cmd.total.tail<3>().cross(contact - ee);
  const Vec3 v_ref_contact = a_ref.head<3>() + a_ref.tail<3>().cross(contact - ee);
  CHECK((v_contact - v_ref_contact).norm() < 1e-15);
  CHECK(cmd.a_res == -0.3);
  CHECK(cmd.a_ref == a_ref);
}
