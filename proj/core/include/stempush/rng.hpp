#pragma once

#include <cstdint>

namespace stempush {

// Counter-based splittable generator: a splitmix64-style finalizer applied to
// key + counter. The integer stream depends only on (seed, split path, draw
// index), so it is bit-reproducible across platforms and independent of any
// scheduling. split() derives statistically independent child streams; use one
// child per subsystem / trial so parallel fan-out cannot perturb results.
class Rng {
 public:
  explicit Rng(uint64_t seed = 0) : key_(mix(seed ^ 0x5EED5EED5EED5EEDull)) {}

  uint64_t next_u64();
  double uniform();                      // [0, 1)
  double uniform(double lo, double hi);  // [lo, hi)
  int uniform_int(int lo, int hi);       // inclusive bounds
  double normal();                       // standard normal, Marsaglia polar

  Rng split(uint64_t stream_id) const;

 private:
  struct RawKey {};
  Rng(uint64_t key, RawKey) : key_(key) {}
  static uint64_t mix(uint64_t z);

  uint64_t key_ = 0;
  uint64_t counter_ = 0;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace stempush
