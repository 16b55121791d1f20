#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace stempush {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat3 = Eigen::Matrix3d;

// Bad user input / bad configuration; the CLI maps this to exit code 1.
// Any other std::runtime_error maps to exit code 2 (runtime failure).
struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Wraps an angle into (-pi, pi].
double wrap_angle(double a);

// End-effector pose: position in meters (robot-base frame), orientation as
// extrinsic-XYZ Euler angles in radians, each component in (-pi, pi].
struct Pose {
  Vec3 position = Vec3::Zero();
  Vec3 euler = Vec3::Zero();  // extrinsic XYZ: R = Rz(e2) * Ry(e1) * Rx(e0)

  Mat3 rotation() const;
  Vec6 flat() const;  // [position; euler]
  bool finite() const;
};

Pose pose_from_flat(const Vec6& v);
Pose pose_from_rotation(const Vec3& position, const Mat3& rotation);

// One end-effector pose sample on a stream timeline (seconds from start).
struct Action {
  Pose pose;
  double timestamp = 0.0;
};

// Square tactile image, 3 channels, intensities in [0,1], row-major (r, c, ch).
// Channel 0: markers at rest, channel 1: displaced markers, channel 2:
// deformation-magnitude heatmap.
struct TactileFrame {
  static constexpr int kChannels = 3;

  int resolution = 0;
  std::vector<float> pixels;
  double timestamp = 0.0;

  float& at(int r, int c, int ch) {
    return pixels[static_cast<size_t>(r * resolution + c) * kChannels + ch];
  }
  float at(int r, int c, int ch) const {
    return pixels[static_cast<size_t>(r * resolution + c) * kChannels + ch];
  }
  int size() const { return resolution * resolution * kChannels; }
};

TactileFrame make_frame(int resolution, double timestamp = 0.0);

// Ground truth of the stem/finger contact. u runs along the finger's conic
// axis, normalized to [0,1]: 0 at the base (camera lens), 1 at the tip.
struct ContactState {
  bool in_contact = false;
  double u = 0.0;
  double penetration = 0.0;       // m, >= 0
  double normal_force = 0.0;      // N, >= 0
  double tangential_force = 0.0;  // N, signed along the finger axis
  bool sticking = false;
};

// A tactile frame paired with the nearest robot state sample.
struct SyncedSample {
  TactileFrame frame;
  Action action;
  double skew = 0.0;  // |frame.timestamp - action.timestamp|
};

}  // namespace stempush
