#pragma once

#include "stempush/control/residual.hpp"
#include "stempush/rng.hpp"
#include "stempush/rollout_log.hpp"
#include "stempush/simworld/models.hpp"
#include "stempush/types.hpp"

#include <optional>

namespace stempush::simworld {

// Finger axis in world coordinates: points run base + u * length * dir.
struct FingerFrame {
  Vec3 base = Vec3::Zero();
  Vec3 dir = Vec3::UnitX();  // unit
};

FingerFrame finger_frame(const FingerModel& finger, const Pose& ee_pose);

// Stem direction for a 2-DOF deflection (rotation-vector components about the
// world x and y axes applied to the rest direction).
Vec3 stem_direction(const StemModel& stem, const Vec2& theta);

// Per-stem dynamic state. u_att is the attachment coordinate on the finger
// axis; present iff this stem is in contact.
struct StemState {
  Vec2 theta = Vec2::Zero();  // rad, rotation-vector components (x, y)
  Vec2 omega = Vec2::Zero();  // rad/s
  std::optional<double> u_att;
  bool sticking = false;
};

struct WorldState {
  StemState stem;
  std::vector<StemState> distractors;
  Pose ee_pose;
  double time = 0.0;
  ContactState contact;  // snapshot of the target stem's contact
};

// Elastic + kinetic + gravitational energy of one free stem (diagnostics).
double stem_energy(const StemModel& model, const StemState& state, double gravity);

// Contact resolution output for a single stem against the finger.
struct ContactSolution {
  ContactState contact;
  Vec3 force_on_stem = Vec3::Zero();  // applied at the stem-side contact point
  double lever_arm = 0.0;             // m from the anchor along the stem
  Vec3 contact_point = Vec3::Zero();  // on the stem surface line, world frame
};

// Resolves stick/slip of the attachment along the finger axis given the
// previous attachment (or none). Pure function of the instantaneous geometry.
ContactSolution resolve_contact(const StemModel& stem, const Vec2& theta,
                                const std::optional<double>& prev_u, bool prev_sticking,
                                const FingerModel& finger, const Pose& ee_pose, double mu_s,
                                double mu_k);

struct StepResult {
  WorldState next;
  std::vector<WorldEvent> events;  // target-stem transitions this tick
};

// One physics tick: the end effector advances by the commanded twist, contact
// is resolved against the moved finger, and each stem integrates its 2-DOF
// dynamics with semi-implicit Euler.
StepResult step(const WorldState& state, const Vec6& ee_twist, double dt, const Models& models,
                Rng& rng);

// Maps control frames (frame_hz) onto physics ticks (1/dt): frame k fires at
// the tick nearest k/frame_hz. Strictly increasing, first frame at tick 0.
struct FrameSchedule {
  int n_ticks = 0;
  std::vector<int> frame_ticks;
};
FrameSchedule make_frame_schedule(double duration_s, double dt, double frame_hz);

// What a command source sees at each control frame.
struct FrameObs {
  int frame_index = 0;
  double t = 0.0;
  Pose ee_pose;
  TactileFrame frame;        // resolution 0 when the rollout has no sensor
  bool in_contact = false;   // measurement-side contact gate
  double s_measured = -1.0;  // in [0,1] when in_contact
  // Ground-truth hooks for oracle predictors; valid only during the call.
  const WorldState* world = nullptr;
  const Models* models = nullptr;
};

class CommandSource {
 public:
  virtual ~CommandSource() = default;
  virtual control::ControlCommand tick(const FrameObs& obs) = 0;
};

// Produces tactile frames and contact-location measurements from them.
class Sensor {
 public:
  virtual ~Sensor() = default;
  virtual TactileFrame render(const WorldState& world, const Models& models, double t,
                              Rng& rng) = 0;
  virtual std::optional<double> measure(const TactileFrame& frame) = 0;
};

struct RolloutOptions {
  double duration_s = 1.0;
  double physics_dt = 1e-3;
  double frame_hz = 60.0;
  uint64_t seed = 0;           // recorded in the log
  bool keep_frames = false;    // retain rendered frames in the log
};

// Steps physics at 1/physics_dt, consults the controller at frame_hz with a
// zero-order hold on the commanded twist in between, and logs every tick and
// frame. sensor may be null: measurements then fall back to ground truth.
RolloutLog rollout(const WorldState& initial, CommandSource& controller, Sensor* sensor,
                   const Models& models, const RolloutOptions& opt, Rng& rng);

}  // namespace stempush::simworld
