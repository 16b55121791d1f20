#include "stempush/simworld/world.hpp"

#include "stempush/strfmt.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

namespace stempush::simworld {

namespace {

Vec3 rodrigues(const Vec3& v, const Vec3& axis, double angle) {
  const double c = std::cos(angle), s = std::sin(angle);
  return v * c + axis.cross(v) * s + axis * (axis.dot(v) * (1.0 - c));
}

// Closest-point parameters (s, t), both clamped to [0,1], between segments
// p0 + s*(p1-p0) and q0 + t*(q1-q0).
std::pair<double, double> closest_segment_params(const Vec3& p0, const Vec3& p1, const Vec3& q0,
                                                 const Vec3& q1) {
  const Vec3 d1 = p1 - p0, d2 = q1 - q0, r = p0 - q0;
  const double a = d1.squaredNorm(), e = d2.squaredNorm();
  const double f = d2.dot(r), c = d1.dot(r), b = d1.dot(d2);
  const double denom = a * e - b * b;
  double s = denom > 1e-18 ? std::clamp((b * f - c * e) / denom, 0.0, 1.0) : 0.0;
  double t = e > 1e-18 ? (b * s + f) / e : 0.0;
  if (t < 0.0) {
    t = 0.0;
    s = a > 1e-18 ? std::clamp(-c / a, 0.0, 1.0) : 0.0;
  } else if (t > 1.0) {
    t = 1.0;
    s = a > 1e-18 ? std::clamp((b - c) / a, 0.0, 1.0) : 0.0;
  }
  return {s, t};
}

void check_finite(double v, const char* field) {
  if (!std::isfinite(v)) {
    throw std::runtime_error(std::string("integration diverged: non-finite ") + field);
  }
}

void check_finite2(const Vec2& v, const char* field) {
  if (!v.allFinite()) {
    throw std::runtime_error(std::string("integration diverged: non-finite ") + field);
  }
}

}  // namespace

FingerFrame finger_frame(const FingerModel& finger, const Pose& ee_pose) {
  const Mat3 r_ee = ee_pose.rotation();
  FingerFrame f;
  f.base = ee_pose.position + r_ee * finger.mount_pose_offset.position;
  f.dir = (r_ee * finger.mount_pose_offset.rotation() * Vec3::UnitX()).normalized();
  return f;
}

Vec3 stem_direction(const StemModel& stem, const Vec2& theta) {
  const double angle = theta.norm();
  if (angle < 1e-12) return stem.rest_direction;
  const Vec3 axis(theta.x() / angle, theta.y() / angle, 0.0);
  return rodrigues(stem.rest_direction, axis, angle);
}

double stem_energy(const StemModel& model, const StemState& state, double gravity) {
  const double th2 = state.theta.squaredNorm();
  const double kinetic = 0.5 * model.inertia() * state.omega.squaredNorm();
  const double elastic = 0.5 * model.k1 * th2 + 0.25 * model.k3 * th2 * th2;
  const Vec3 d = stem_direction(model, state.theta);
  const double potential =
      model.tip_mass * gravity * model.length * (d.z() - model.rest_direction.z());
  return kinetic + elastic + potential;
}

ContactSolution resolve_contact(const StemModel& stem, const Vec2& theta,
                                const std::optional<double>& prev_u, bool prev_sticking,
                                const FingerModel& finger, const Pose& ee_pose, double mu_s,
                                double mu_k) {
  const FingerFrame ff = finger_frame(finger, ee_pose);
  const Vec3 e_hat = stem_direction(stem, theta);
  ContactSolution out;

  // Offset from the finger-axis point A(u) to the stem centreline, as an
  // affine function of u: w(u) = w0 + u * wd, always perpendicular to e_hat.
  const Vec3 rel0 = ff.base - stem.anchor;
  const Vec3 w0 = -(rel0 - rel0.dot(e_hat) * e_hat);
  const Vec3 dirp = ff.dir - ff.dir.dot(e_hat) * e_hat;
  const Vec3 wd = -finger.length * dirp;

  // Evaluates the contact at attachment coordinate u. Returns false (leaving
  // out.contact cleared) when the geometry no longer supports contact there.
  // A held attachment tolerates micro-separation down to -contact_hysteresis
  // (at zero force) so grazing touches do not churn made/lost every tick.
  const auto attempt = [&](double u, bool sticking_now) {
    if (u < 0.0 || u > 1.0) return false;
    const Vec3 a_pt = ff.base + u * finger.length * ff.dir;
    const double lever = (a_pt - stem.anchor).dot(e_hat);
    if (lever < 0.0 || lever > stem.length) return false;
    const Vec3 w = w0 + u * wd;
    const double dist = w.norm();
    double delta = finger.radius_profile(u) + stem.radius - dist;
    if (prev_u.has_value() ? delta <= -finger.contact_hysteresis : delta <= 0.0) return false;
    delta = std::max(delta, 0.0);

    const double g = w.dot(ff.dir);
    const double wperp = std::sqrt(std::max(0.0, w.squaredNorm() - g * g));
    const double n_force = finger.normal_force(delta, u);
    out.contact.in_contact = true;
    out.contact.u = u;
    out.contact.penetration = delta;
    out.contact.normal_force = n_force;
    out.contact.sticking = sticking_now;
    if (wperp > 1e-9) {
      // Membrane force acts along w: normal component (perpendicular to the
      // finger axis) of magnitude n_force, axial component n_force * g/wperp.
      out.contact.tangential_force = n_force * g / wperp;
      out.force_on_stem = (n_force / wperp) * w;
    } else {
      out.contact.tangential_force = 0.0;
      out.force_on_stem = dist > 1e-12 ? Vec3(n_force * w / dist) : Vec3::Zero();
    }
    out.lever_arm = lever;
    out.contact_point = stem.anchor + lever * e_hat;
    return true;
  };

  // Candidate attachment: the held coordinate when attached, else the fresh
  // closest approach between the two segments. A fresh interior contact has
  // its offset perpendicular to the axis (g = 0), so it starts stuck; a
  // clamped end-of-finger candidate faces the same cone test as everyone.
  double u_att;
  if (prev_u.has_value()) {
    u_att = *prev_u;
  } else {
    const auto [u_star, t_star] =
        closest_segment_params(ff.base, ff.base + finger.length * ff.dir, stem.anchor,
                               stem.anchor + stem.length * e_hat);
    (void)t_star;
    u_att = u_star;
  }

  const Vec3 w_att = w0 + u_att * wd;
  const double g_att = w_att.dot(ff.dir);
  const double wperp_att = std::sqrt(std::max(0.0, w_att.squaredNorm() - g_att * g_att));

  // Grace window: no pressure, no friction capacity, nothing to slide on —
  // the attachment just rides along (or detaches past the hysteresis depth).
  const double delta_att = finger.radius_profile(u_att) + stem.radius - w_att.norm();
  if (prev_u.has_value() && delta_att <= 0.0) {
    attempt(u_att, true);
    return out;
  }

  if (std::abs(g_att) <= mu_s * wperp_att || wperp_att <= 1e-9) {
    // Inside the friction cone: the attachment holds its finger-frame spot.
    attempt(u_att, true);
    return out;
  }

  // Sliding: find u where the axial drive sits exactly on the kinetic cone,
  // (1 + mu_k^2) g(u)^2 = mu_k^2 |w(u)|^2, keeping the sign of g. No
  // admissible root (or one off the finger / off the stem / separated) means
  // the stem escapes along the axis: contact is lost.
  const double g0 = w0.dot(ff.dir), gd = wd.dot(ff.dir);
  const double mu2 = mu_k * mu_k;
  const double qa = (1.0 + mu2) * gd * gd - mu2 * wd.squaredNorm();
  const double qb = 2.0 * ((1.0 + mu2) * g0 * gd - mu2 * w0.dot(wd));
  const double qc = (1.0 + mu2) * g0 * g0 - mu2 * w0.squaredNorm();

  std::vector<double> roots;
  if (std::abs(qa) > 1e-18) {
    const double disc = qb * qb - 4.0 * qa * qc;
    if (disc >= 0.0) {
      const double sq = std::sqrt(disc);
      // Numerically stable pair: q = -(b + sign(b)*sqrt(disc))/2.
      const double q = -0.5 * (qb + std::copysign(sq, qb));
      roots.push_back(q / qa);
      if (std::abs(q) > 1e-18) roots.push_back(qc / q);
    }
  } else if (std::abs(qb) > 1e-18) {
    roots.push_back(-qc / qb);
  }

  double best = std::numeric_limits<double>::quiet_NaN();
  for (double r : roots) {
    const double g_r = g0 + r * gd;
    if (g_r * g_att < 0.0) continue;  // slip cannot reverse the driving side
    if (!std::isfinite(best) || std::abs(r - u_att) < std::abs(best - u_att)) best = r;
  }
  if (std::isfinite(best)) attempt(best, false);
  return out;
}

StepResult step(const WorldState& state, const Vec6& ee_twist, double dt, const Models& models,
                Rng& rng) {
  (void)rng;  // physics is noiseless; noise enters at the sensor only
  if (!(dt > 0.0) || dt > 2e-3 + 1e-12) {
    throw ValidationError("step: dt must lie in (0, 2 ms], got " + fmt_double(dt));
  }
  if (!ee_twist.allFinite()) throw ValidationError("step: ee twist must be finite");

  StepResult out;
  out.next = state;
  WorldState& next = out.next;
  next.distractors.resize(models.distractors.size());

  next.ee_pose.position += dt * ee_twist.head<3>();
  for (int i = 0; i < 3; ++i) {
    next.ee_pose.euler[i] = wrap_angle(next.ee_pose.euler[i] + dt * ee_twist[3 + i]);
  }

  const auto integrate = [&](const StemModel& model, StemState& ss, bool primary) {
    const ContactSolution sol = resolve_contact(model, ss.theta, ss.u_att, ss.sticking,
                                                models.finger, next.ee_pose, models.mu_s,
                                                models.mu_k);
    if (primary) {
      const bool was = ss.u_att.has_value();
      const bool is = sol.contact.in_contact;
      if (!was && is) out.events.push_back(WorldEvent::contact_made);
      if (was && !is) out.events.push_back(WorldEvent::contact_lost);
      if (was && is && ss.sticking && !sol.contact.sticking) {
        out.events.push_back(WorldEvent::slip_started);
      }
      if (was && is && !ss.sticking && sol.contact.sticking) {
        out.events.push_back(WorldEvent::slip_ended);
      }
    }

    const Vec3 e_hat = stem_direction(model, ss.theta);
    Vec2 tau = -(model.k1 + model.k3 * ss.theta.squaredNorm()) * ss.theta - model.damping * ss.omega;
    tau += (model.tip_mass * models.gravity * model.length * e_hat.cross(Vec3(0, 0, -1))).head<2>();
    if (sol.contact.in_contact) {
      tau += (sol.lever_arm * e_hat.cross(sol.force_on_stem)).head<2>();
    }

    ss.omega += (dt / model.inertia()) * tau;
    ss.theta += dt * ss.omega;
    ss.u_att = sol.contact.in_contact ? std::optional<double>(sol.contact.u) : std::nullopt;
    ss.sticking = sol.contact.in_contact && sol.contact.sticking;
    return sol;
  };

  const ContactSolution target = integrate(models.stem, next.stem, true);
  next.contact = target.contact;
  for (size_t i = 0; i < next.distractors.size(); ++i) {
    integrate(models.distractors[i], next.distractors[i], false);
  }
  next.time = state.time + dt;

  check_finite2(next.stem.theta, "stem.theta");
  check_finite2(next.stem.omega, "stem.omega");
  if (!next.ee_pose.finite()) throw std::runtime_error("integration diverged: non-finite ee_pose");
  check_finite(next.contact.normal_force, "contact.normal_force");
  if (next.stem.theta.norm() >= 1.5707963267948966) {
    throw std::runtime_error("integration diverged: stem.theta reached pi/2");
  }
  for (const auto& d : next.distractors) {
    check_finite2(d.theta, "distractor.theta");
    check_finite2(d.omega, "distractor.omega");
  }
  return out;
}

FrameSchedule make_frame_schedule(double duration_s, double dt, double frame_hz) {
  if (!(duration_s > 0.0)) throw ValidationError("rollout: duration must be positive");
  if (!(dt > 0.0) || dt > 2e-3 + 1e-12) {
    throw ValidationError("rollout: physics_dt must lie in (0, 2 ms]");
  }
  if (!(frame_hz > 0.0) || 1.0 / frame_hz < dt - 1e-12) {
    throw ValidationError("rollout: frame period must be at least one physics step");
  }
  FrameSchedule fs;
  fs.n_ticks = std::max(1, static_cast<int>(std::lround(duration_s / dt)));
  const int k_max = static_cast<int>(std::ceil(duration_s * frame_hz)) + 1;
  for (int k = 0; k <= k_max; ++k) {
    const int tick = static_cast<int>(std::lround(k / frame_hz / dt));
    if (tick >= fs.n_ticks) break;
    if (!fs.frame_ticks.empty() && tick <= fs.frame_ticks.back()) continue;
    fs.frame_ticks.push_back(tick);
  }
  return fs;
}

RolloutLog rollout(const WorldState& initial, CommandSource& controller, Sensor* sensor,
                   const Models& models, const RolloutOptions& opt, Rng& rng) {
  models.validate();
  const FrameSchedule sched = make_frame_schedule(opt.duration_s, opt.physics_dt, opt.frame_hz);

  RolloutLog log;
  log.seed = opt.seed;
  log.frame_hz = opt.frame_hz;
  log.physics_dt = opt.physics_dt;
  log.ticks.reserve(static_cast<size_t>(sched.n_ticks));
  log.frames.reserve(sched.frame_ticks.size());

  WorldState state = initial;
  state.distractors.resize(models.distractors.size());

  Vec6 held = Vec6::Zero();
  size_t next_frame = 0;
  for (int tick = 0; tick < sched.n_ticks; ++tick) {
    if (next_frame < sched.frame_ticks.size() && sched.frame_ticks[next_frame] == tick) {
      FrameObs obs;
      obs.frame_index = static_cast<int>(next_frame);
      obs.t = state.time;
      obs.ee_pose = state.ee_pose;
      obs.world = &state;
      obs.models = &models;
      if (sensor != nullptr) {
        obs.frame = sensor->render(state, models, state.time, rng);
        const auto measured = sensor->measure(obs.frame);
        obs.in_contact = measured.has_value();
        obs.s_measured = measured.value_or(-1.0);
      } else {
        obs.in_contact = state.stem.u_att.has_value();
        obs.s_measured = state.stem.u_att.value_or(-1.0);
      }

      const auto wall0 = std::chrono::steady_clock::now();
      const control::ControlCommand cmd = controller.tick(obs);
      const double wall_ms =
          std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - wall0)
              .count();
      if (!cmd.total.allFinite()) {
        throw std::runtime_error("rollout aborted: non-finite command at tick " + fmt_int(tick));
      }
      held = cmd.total;

      FrameRecord fr;
      fr.t = state.time;
      fr.u_true = state.stem.u_att;
      if (obs.in_contact) fr.u_measured = obs.s_measured;
      fr.ee_pose = state.ee_pose.flat();
      fr.a_ref = cmd.a_ref;
      fr.a_res = cmd.a_res;
      fr.contact_axis = cmd.contact_axis;
      fr.command = cmd.total;
      fr.normal_force = state.contact.normal_force;
      fr.tangential_force = state.contact.tangential_force;
      fr.in_contact = obs.in_contact;
      fr.sticking = state.contact.sticking;
      fr.saturated = cmd.saturated;
      fr.degraded = cmd.degraded;
      fr.comp_time_ms = wall_ms;
      log.frames.push_back(fr);
      if (opt.keep_frames && sensor != nullptr) log.rendered.push_back(obs.frame);
      ++next_frame;
    }

    StepResult sr = step(state, held, opt.physics_dt, models, rng);
    state = std::move(sr.next);

    TickRecord tr;
    tr.t = state.time;
    tr.u_true = state.stem.u_att;
    tr.penetration = state.contact.penetration;
    tr.normal_force = state.contact.normal_force;
    tr.tangential_force = state.contact.tangential_force;
    tr.sticking = state.contact.sticking;
    tr.events = sr.events;
    if (log.s_ref < 0.0 && state.stem.u_att.has_value()) {
      for (const auto e : sr.events) {
        if (e == WorldEvent::contact_made) log.s_ref = *state.stem.u_att;
      }
    }
    log.ticks.push_back(std::move(tr));
  }
  return log;
}

}  // namespace stempush::simworld
