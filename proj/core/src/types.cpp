#include "stempush/types.hpp"

#include <cmath>

namespace stempush {

double wrap_angle(double a) {
  double r = std::remainder(a, 2.0 * M_PI);
  if (r <= -M_PI) r = M_PI;  // remainder() lands in [-pi, pi]; fold -pi onto pi
  return r;
}

Mat3 Pose::rotation() const {
  return (Eigen::AngleAxisd(euler.z(), Vec3::UnitZ()) *
          Eigen::AngleAxisd(euler.y(), Vec3::UnitY()) *
          Eigen::AngleAxisd(euler.x(), Vec3::UnitX()))
      .toRotationMatrix();
}

Vec6 Pose::flat() const {
  Vec6 v;
  v << position, euler;
  return v;
}

bool Pose::finite() const {
  return position.allFinite() && euler.allFinite();
}

Pose pose_from_flat(const Vec6& v) {
  Pose p;
  p.position = v.head<3>();
  p.euler = Vec3(wrap_angle(v[3]), wrap_angle(v[4]), wrap_angle(v[5]));
  return p;
}

Pose pose_from_rotation(const Vec3& position, const Mat3& rotation) {
  // Extrinsic XYZ means R = Rz(c)*Ry(b)*Rx(a), i.e. intrinsic ZYX angles.
  Vec3 zyx = rotation.eulerAngles(2, 1, 0);
  Pose p;
  p.position = position;
  p.euler = Vec3(wrap_angle(zyx[2]), wrap_angle(zyx[1]), wrap_angle(zyx[0]));
  return p;
}

TactileFrame make_frame(int resolution, double timestamp) {
  TactileFrame f;
  f.resolution = resolution;
  f.pixels.assign(static_cast<size_t>(resolution) * resolution * TactileFrame::kChannels, 0.0f);
  f.timestamp = timestamp;
  return f;
}

}  // namespace stempush
