#include "stempush/sync.hpp"

#include <algorithm>
#include <cmath>

namespace stempush {

SyncResult synchronize(std::vector<TactileFrame> frames, std::vector<Action> actions,
                       double tolerance) {
  if (actions.empty()) {
    throw ValidationError("unsynchronizable: empty action stream");
  }
  if (tolerance < 0.0) {
    throw ValidationError("sync tolerance must be >= 0");
  }
  std::stable_sort(frames.begin(), frames.end(),
                   [](const auto& a, const auto& b) { return a.timestamp < b.timestamp; });
  std::stable_sort(actions.begin(), actions.end(),
                   [](const auto& a, const auto& b) { return a.timestamp < b.timestamp; });

  SyncResult out;
  out.samples.reserve(frames.size());
  for (auto& frame : frames) {
    const double t = frame.timestamp;
    auto it = std::lower_bound(actions.begin(), actions.end(), t,
                               [](const Action& a, double v) { return a.timestamp < v; });
    // Candidates: first action at >= t, and its predecessor. Ties -> earlier.
    const Action* best = nullptr;
    if (it != actions.end()) best = &*it;
    if (it != actions.begin()) {
      const Action& prev = *(it - 1);
      if (best == nullptr || t - prev.timestamp <= best->timestamp - t) best = &prev;
    }
    const double skew = std::abs(best->timestamp - t);
    if (skew <= tolerance) {
      out.samples.push_back(SyncedSample{std::move(frame), *best, skew});
    } else {
      ++out.dropped;
    }
  }
  return out;
}

std::vector<Action> resample_actions(const std::vector<Action>& actions, double rate_hz) {
  if (actions.empty()) throw ValidationError("resample_actions: empty action stream");
  if (!(rate_hz > 0.0)) throw ValidationError("resample_actions: rate_hz must be > 0");
  for (size_t i = 1; i < actions.size(); ++i) {
    if (!(actions[i].timestamp > actions[i - 1].timestamp)) {
      throw ValidationError("resample_actions: timestamps must be strictly increasing");
    }
  }
  if (actions.size() == 1) return actions;

  const double t0 = actions.front().timestamp;
  const double duration = actions.back().timestamp - t0;
  const double source_rate = static_cast<double>(actions.size() - 1) / duration;
  if (rate_hz > source_rate * (1.0 + 1e-9)) {
    throw ValidationError("resample_actions: rate_hz exceeds source rate");
  }

  // +1e-9 guards against duration*rate landing just below an integer.
  const auto count = static_cast<size_t>(std::floor(duration * rate_hz + 1e-9)) + 1;
  std::vector<Action> out;
  out.reserve(count);
  for (size_t k = 0; k < count; ++k) {
    const double t = t0 + static_cast<double>(k) / rate_hz;
    auto it = std::lower_bound(actions.begin(), actions.end(), t,
                               [](const Action& a, double v) { return a.timestamp < v; });
    const Action* best = nullptr;
    if (it != actions.end()) best = &*it;
    if (it != actions.begin()) {
      const Action& prev = *(it - 1);
      if (best == nullptr || t - prev.timestamp <= best->timestamp - t) best = &prev;
    }
    out.push_back(Action{best->pose, t});
  }
  return out;
}

}  // namespace stempush
