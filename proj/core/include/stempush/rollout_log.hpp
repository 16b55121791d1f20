#pragma once

#include "stempush/types.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>

namespace stempush {

enum class WorldEvent { contact_made, contact_lost, slip_started, slip_ended };
const char* to_string(WorldEvent e);

// Ground truth captured every physics tick (1 kHz by default).
struct TickRecord {
  double t = 0.0;
  std::optional<double> u_true;   // attachment coordinate; absent = no contact
  double penetration = 0.0;
  double normal_force = 0.0;
  double tangential_force = 0.0;
  bool sticking = false;
  std::vector<WorldEvent> events;
};

// One record per control frame (60 Hz by default).
struct FrameRecord {
  double t = 0.0;
  std::optional<double> u_true;
  std::optional<double> u_measured;  // CLM output when available
  Vec6 ee_pose = Vec6::Zero();       // executed pose at the frame tick
  Vec6 a_ref = Vec6::Zero();
  double a_res = 0.0;
  Vec3 contact_axis = Vec3::Zero();
  Vec6 command = Vec6::Zero();
  double normal_force = 0.0;
  double tangential_force = 0.0;
  bool in_contact = false;
  bool sticking = false;
  bool saturated = false;
  bool degraded = false;
  double comp_time_ms = 0.0;  // wall time; serialized only on request
};

struct RolloutLog {
  uint64_t seed = 0;
  double frame_hz = 60.0;
  double physics_dt = 1e-3;
  double s_ref = -1.0;  // ground-truth u at first contact; < 0 = never touched
  std::vector<TickRecord> ticks;
  std::vector<FrameRecord> frames;
  std::vector<TactileFrame> rendered;  // populated only when frames are retained

  // One CSV line per control frame. comp_time_ms is nondeterministic wall
  // time, so it is only emitted when explicitly requested.
  void write_csv(std::ostream& os, bool include_timings = false) const;
  std::string csv(bool include_timings = false) const;

  // Event stream in tick order, with tick indices.
  std::vector<std::pair<int, WorldEvent>> event_sequence() const;
};

// Parses the output of write_csv (used by the plot command and tests).
struct ParsedFrameCsv {
  std::vector<FrameRecord> frames;
};
ParsedFrameCsv read_frame_csv(std::istream& is);

}  // namespace stempush
