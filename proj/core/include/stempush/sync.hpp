#pragma once

#include "stempush/types.hpp"

namespace stempush {

struct SyncResult {
  std::vector<SyncedSample> samples;
  int dropped = 0;  // frames with no action within tolerance
};

// Pairs every frame with the action of nearest timestamp (ties resolve to the
// earlier action); frames with no action within `tolerance` are dropped and
// counted. Inputs are sorted internally, so the pairing depends only on the
// timestamps, not on delivery order.
SyncResult synchronize(std::vector<TactileFrame> frames, std::vector<Action> actions,
                       double tolerance = 0.010);

// Resamples onto the uniform grid t0 + k/rate_hz, k = 0..floor(duration*rate),
// taking the nearest source sample at each grid point. rate_hz must not exceed
// the source rate; timestamps must be strictly increasing.
std::vector<Action> resample_actions(const std::vector<Action>& actions, double rate_hz);

}  // namespace stempush
