#include "stempush/rng.hpp"

#include <cmath>

namespace stempush {

uint64_t Rng::mix(uint64_t z) {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

uint64_t Rng::next_u64() {
  ++counter_;
  return mix(key_ + 0x9E3779B97F4A7C15ull * counter_);
}

double Rng::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) {
  return lo + (hi - lo) * uniform();
}

int Rng::uniform_int(int lo, int hi) {
  const uint64_t span = static_cast<uint64_t>(hi - lo) + 1;
  return lo + static_cast<int>(next_u64() % span);
}

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double v1 = 0.0, v2 = 0.0, s = 0.0;
  do {
    v1 = uniform(-1.0, 1.0);
    v2 = uniform(-1.0, 1.0);
    s = v1 * v1 + v2 * v2;
  } while (s >= 1.0 || s == 0.0);
  const double f = std::sqrt(-2.0 * std::log(s) / s);
  spare_ = v2 * f;
  has_spare_ = true;
  return v1 * f;
}

Rng Rng::split(uint64_t stream_id) const {
  return Rng(mix(key_ ^ mix(stream_id ^ 0x51717ED5517EA38Bull)), RawKey{});
}

}  // namespace stempush
