#pragma once

// Pose representation on R^3 x SO(3)^J: unit quaternions, per-frame poses,
// geodesic distances and geodesic interpolation.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "motionbridge/errors.hpp"

namespace motionbridge {

template <typename Scalar>
using Vec3 = Eigen::Matrix<Scalar, 3, 1>;

template <typename Scalar>
using Vec4 = Eigen::Matrix<Scalar, 4, 1>;

template <typename Scalar>
using Mat3 = Eigen::Matrix<Scalar, 3, 3>;

/// Rotation stored as a unit 4-vector in (w, x, y, z) order.
/// q and -q describe the same rotation; distance functions honour that.
template <typename Scalar>
class UnitQuaternion {
 public:
  UnitQuaternion() : coeffs_(Scalar(1), Scalar(0), Scalar(0), Scalar(0)) {}

  /// Normalizes its input. A zero vector is rejected.
  UnitQuaternion(Scalar w, Scalar x, Scalar y, Scalar z) : UnitQuaternion(Vec4<Scalar>(w, x, y, z)) {}

  explicit UnitQuaternion(const Vec4<Scalar>& wxyz) : coeffs_(wxyz) {
    const Scalar n = coeffs_.norm();
    if (!(n > Scalar(0)) || !std::isfinite(static_cast<double>(n))) {
      throw SchemaError("quaternion has zero or non-finite norm");
    }
    coeffs_ /= n;
  }

  static UnitQuaternion identity() { return UnitQuaternion(); }

  /// Rotation of `angle` radians about `axis` (need not be unit length).
  static UnitQuaternion from_axis_angle(const Vec3<Scalar>& axis, Scalar angle) {
    const Vec3<Scalar> a = axis.normalized();
    const Scalar h = angle / Scalar(2);
    return UnitQuaternion(std::cos(h), a.x() * std::sin(h), a.y() * std::sin(h), a.z() * std::sin(h));
  }

  Scalar w() const { return coeffs_[0]; }
  Scalar x() const { return coeffs_[1]; }
  Scalar y() const { return coeffs_[2]; }
  Scalar z() const { return coeffs_[3]; }
  const Vec4<Scalar>& coeffs() const { return coeffs_; }

  Scalar dot(const UnitQuaternion& other) const { return coeffs_.dot(other.coeffs_); }

  UnitQuaternion operator-() const {
    UnitQuaternion r;
    r.coeffs_ = -coeffs_;
    return r;
  }

  /// Hamilton product; composes rotations (this applied after `rhs`).
  UnitQuaternion operator*(const UnitQuaternion& rhs) const {
    const Scalar w1 = w(), x1 = x(), y1 = y(), z1 = z();
    const Scalar w2 = rhs.w(), x2 = rhs.x(), y2 = rhs.y(), z2 = rhs.z();
    return UnitQuaternion(w1 * w2 - x1 * x2 - y1 * y2 - z1 * z2,
                          w1 * x2 + x1 * w2 + y1 * z2 - z1 * y2,
                          w1 * y2 - x1 * z2 + y1 * w2 + z1 * x2,
                          w1 * z2 + x1 * y2 - y1 * x2 + z1 * w2);
  }

  Mat3<Scalar> rotation_matrix() const { return quaternion_to_matrix(coeffs_); }

  /// Rotation matrix of a (w,x,y,z) 4-vector using the unit-norm formula
  /// without renormalizing, so derivatives w.r.t. raw components are polynomial.
  static Mat3<Scalar> quaternion_to_matrix(const Vec4<Scalar>& q) {
    const Scalar w = q[0], x = q[1], y = q[2], z = q[3];
    Mat3<Scalar> r;
    r << 1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),
        2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
        2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y);
    return r;
  }

 private:
  Vec4<Scalar> coeffs_;
};

/// One frame of motion: root position plus one rotation per joint.
template <typename Scalar>
struct PoseSkeleton {
  Vec3<Scalar> root_translation = Vec3<Scalar>::Zero();
  std::vector<UnitQuaternion<Scalar>> rotations;

  std::size_t joint_count() const { return rotations.size(); }
};

using Quat = UnitQuaternion<double>;
using Pose = PoseSkeleton<double>;

/// Named fixed-rate sequence of poses over one topology.
struct MotionClip {
  std::string name;
  double fps = 30.0;
  std::vector<Pose> frames;
  std::string topology_ref;

  std::size_t size() const { return frames.size(); }
  std::size_t joint_count() const { return frames.empty() ? 0 : frames.front().joint_count(); }
};

/// Weight of the rotational term in the pose metric.
struct MetricConfig {
  double w = 1.0;
};

/// Shortest-arc angle between two rotations, 2 acos |<q1, q2>|, in [0, pi].
/// Evaluated as 4 atan2(|a - b|, |a + b|) on hemisphere-aligned unit vectors,
/// which equals the arccos form but stays accurate near 0 and pi.
template <typename Scalar>
Scalar rotation_distance(const UnitQuaternion<Scalar>& q1, const UnitQuaternion<Scalar>& q2) {
  Vec4<Scalar> a = q1.coeffs();
  Vec4<Scalar> b = q2.coeffs();
  if (std::abs(a.norm() - Scalar(1)) > Scalar(1e-6)) a.normalize();
  if (std::abs(b.norm() - Scalar(1)) > Scalar(1e-6)) b.normalize();
  if (a.dot(b) < Scalar(0)) b = -b;
  return Scalar(4) * std::atan2((a - b).norm(), (a + b).norm());
}

/// Root Euclidean distance plus w times the summed joint arc lengths.
template <typename Scalar>
Scalar pose_distance(const PoseSkeleton<Scalar>& a, const PoseSkeleton<Scalar>& b,
                     const MetricConfig& cfg = {}) {
  if (a.joint_count() != b.joint_count()) {
    throw DimensionMismatch("pose_distance: joint counts differ (" + std::to_string(a.joint_count()) +
                            " vs " + std::to_string(b.joint_count()) + ")");
  }
  Scalar rot = Scalar(0);
  for (std::size_t j = 0; j < a.rotations.size(); ++j) rot += rotation_distance(a.rotations[j], b.rotations[j]);
  return (a.root_translation - b.root_translation).norm() + Scalar(cfg.w) * rot;
}

/// Constant-speed great-circle interpolation along the shortest arc.
/// q2 is flipped into q1's hemisphere first; near-identical inputs fall back
/// to normalized linear interpolation.
template <typename Scalar>
UnitQuaternion<Scalar> slerp(const UnitQuaternion<Scalar>& q1, const UnitQuaternion<Scalar>& q2, Scalar tau) {
  if (tau == Scalar(0)) return q1;
  if (tau == Scalar(1)) return q2;
  Vec4<Scalar> a = q1.coeffs();
  Vec4<Scalar> b = q2.coeffs();
  Scalar d = a.dot(b);
  if (d < Scalar(0)) {
    b = -b;
    d = -d;
  }
  const Scalar theta = std::acos(std::clamp(d, Scalar(-1), Scalar(1)));
  const Scalar sin_theta = std::sin(theta);
  if (sin_theta < Scalar(1e-7)) {
    return UnitQuaternion<Scalar>(Vec4<Scalar>((Scalar(1) - tau) * a + tau * b));
  }
  const Scalar wa = std::sin((Scalar(1) - tau) * theta) / sin_theta;
  const Scalar wb = std::sin(tau * theta) / sin_theta;
  return UnitQuaternion<Scalar>(Vec4<Scalar>(wa * a + wb * b));
}

/// Point at parameter tau on the product-manifold geodesic from s to t.
template <typename Scalar>
PoseSkeleton<Scalar> interpolate_pose(const PoseSkeleton<Scalar>& s, const PoseSkeleton<Scalar>& t, Scalar tau) {
  if (s.joint_count() != t.joint_count()) {
    throw DimensionMismatch("interpolate_pose: joint counts differ");
  }
  if (tau == Scalar(0)) return s;
  if (tau == Scalar(1)) return t;
  PoseSkeleton<Scalar> out;
  out.root_translation = (Scalar(1) - tau) * s.root_translation + tau * t.root_translation;
  out.rotations.reserve(s.rotations.size());
  for (std::size_t j = 0; j < s.rotations.size(); ++j) {
    out.rotations.push_back(slerp(s.rotations[j], t.rotations[j], tau));
  }
  return out;
}

}  // namespace motionbridge
