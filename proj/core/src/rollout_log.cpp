#include "stempush/rollout_log.hpp"

#include "stempush/strfmt.hpp"

#include <ostream>
#include <sstream>

namespace stempush {
namespace {

const char* kColumns =
    "t,u_true,u_measured,ee_x,ee_y,ee_z,ee_rx,ee_ry,ee_rz,"
    "a_ref_vx,a_ref_vy,a_ref_vz,a_ref_wx,a_ref_wy,a_ref_wz,"
    "a_res,axis_x,axis_y,axis_z,"
    "cmd_vx,cmd_vy,cmd_vz,cmd_wx,cmd_wy,cmd_wz,"
    "normal_force,tangential_force,in_contact,sticking,saturated,degraded";

std::string opt_field(const std::optional<double>& v) {
  return v ? fmt_double(*v) : std::string();
}

}  // namespace

const char* to_string(WorldEvent e) {
  switch (e) {
    case WorldEvent::contact_made: return "contact_made";
    case WorldEvent::contact_lost: return "contact_lost";
    case WorldEvent::slip_started: return "slip_started";
    case WorldEvent::slip_ended: return "slip_ended";
  }
  return "?";
}

void RolloutLog::write_csv(std::ostream& os, bool include_timings) const {
  os << kColumns;
  if (include_timings) os << ",comp_time_ms";
  os << '\n';
  for (const auto& f : frames) {
    std::vector<std::string> fields;
    fields.reserve(32);
    fields.push_back(fmt_double(f.t));
    fields.push_back(opt_field(f.u_true));
    fields.push_back(opt_field(f.u_measured));
    for (int i = 0; i < 6; ++i) fields.push_back(fmt_double(f.ee_pose[i]));
    for (int i = 0; i < 6; ++i) fields.push_back(fmt_double(f.a_ref[i]));
    fields.push_back(fmt_double(f.a_res));
    for (int i = 0; i < 3; ++i) fields.push_back(fmt_double(f.contact_axis[i]));
    for (int i = 0; i < 6; ++i) fields.push_back(fmt_double(f.command[i]));
    fields.push_back(fmt_double(f.normal_force));
    fields.push_back(fmt_double(f.tangential_force));
    fields.push_back(f.in_contact ? "1" : "0");
    fields.push_back(f.sticking ? "1" : "0");
    fields.push_back(f.saturated ? "1" : "0");
    fields.push_back(f.degraded ? "1" : "0");
    if (include_timings) fields.push_back(fmt_double(f.comp_time_ms));
    os << join_csv(fields) << '\n';
  }
}

std::string RolloutLog::csv(bool include_timings) const {
  std::ostringstream oss;
  write_csv(oss, include_timings);
  return oss.str();
}

std::vector<std::pair<int, WorldEvent>> RolloutLog::event_sequence() const {
  std::vector<std::pair<int, WorldEvent>> out;
  for (size_t i = 0; i < ticks.size(); ++i) {
    for (WorldEvent e : ticks[i].events) out.emplace_back(static_cast<int>(i), e);
  }
  return out;
}

ParsedFrameCsv read_frame_csv(std::istream& is) {
  ParsedFrameCsv out;
  std::string line;
  if (!std::getline(is, line)) throw ValidationError("frame csv: missing header");
  const auto header = split_csv_line(line);
  const auto expected = split_csv_line(kColumns);
  if (header.size() < expected.size()) throw ValidationError("frame csv: bad header");
  for (size_t i = 0; i < expected.size(); ++i) {
    if (header[i] != expected[i]) {
      throw ValidationError("frame csv: unexpected column '" + header[i] + "'");
    }
  }
  const bool has_timings = header.size() > expected.size();
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != header.size()) throw ValidationError("frame csv: ragged row");
    FrameRecord r;
    size_t k = 0;
    r.t = parse_double(f[k++]);
    r.u_true = f[k].empty() ? std::nullopt : std::optional<double>(parse_double(f[k]));
    ++k;
    r.u_measured = f[k].empty() ? std::nullopt : std::optional<double>(parse_double(f[k]));
    ++k;
    for (int i = 0; i < 6; ++i) r.ee_pose[i] = parse_double(f[k++]);
    for (int i = 0; i < 6; ++i) r.a_ref[i] = parse_double(f[k++]);
    r.a_res = parse_double(f[k++]);
    for (int i = 0; i < 3; ++i) r.contact_axis[i] = parse_double(f[k++]);
    for (int i = 0; i < 6; ++i) r.command[i] = parse_double(f[k++]);
    r.normal_force = parse_double(f[k++]);
    r.tangential_force = parse_double(f[k++]);
    r.in_contact = f[k++] == "1";
    r.sticking = f[k++] == "1";
    r.saturated = f[k++] == "1";
    r.degraded = f[k++] == "1";
    if (has_timings) r.comp_time_ms = parse_double(f[k++]);
    out.frames.push_back(r);
  }
  return out;
}

}  // namespace stempush
