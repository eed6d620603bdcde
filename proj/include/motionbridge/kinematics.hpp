#pragma once

// Skeleton topology, forward kinematics and joint sphere radii.

#include <Eigen/Dense>

#include <string>
#include <vector>

#include "motionbridge/pose.hpp"

namespace motionbridge {

template <typename Scalar>
using Positions = Eigen::Matrix<Scalar, Eigen::Dynamic, 3>;

struct SkeletonTopology {
  std::vector<std::string> joint_names;
  std::vector<int> parents;                // -1 for the root, parents[j] < j otherwise
  std::vector<Vec3<double>> local_offsets;

  std::size_t joint_count() const { return parents.size(); }

  /// Throws TopologyError unless this is a single-rooted, parent-sorted tree.
  void validate() const;

  /// Immediate children of every joint.
  std::vector<std::vector<int>> children() const;

  /// Bones as (parent, child) pairs in child order.
  std::vector<std::pair<int, int>> bones() const;

  bool same_structure(const SkeletonTopology& other) const;
};

/// World-space joint positions, one row per joint. The root sits at
/// root_translation plus its own (usually zero) local offset.
template <typename Scalar>
Positions<Scalar> forward_kinematics(const SkeletonTopology& topology, const PoseSkeleton<Scalar>& pose) {
  topology.validate();
  const auto count = topology.joint_count();
  if (pose.joint_count() != count) {
    throw DimensionMismatch("forward_kinematics: pose has " + std::to_string(pose.joint_count()) +
                            " rotations, topology has " + std::to_string(count) + " joints");
  }
  Positions<Scalar> positions(static_cast<Eigen::Index>(count), 3);
  std::vector<Mat3<Scalar>> world_rot(count);
  for (std::size_t j = 0; j < count; ++j) {
    const Vec3<Scalar> offset = topology.local_offsets[j].template cast<Scalar>();
    const Mat3<Scalar> local = pose.rotations[j].rotation_matrix();
    const int p = topology.parents[j];
    if (p < 0) {
      world_rot[j] = local;
      positions.row(j) = (pose.root_translation + offset).transpose();
    } else {
      world_rot[j] = world_rot[p] * local;
      positions.row(j) = positions.row(p) + (world_rot[p] * offset).transpose();
    }
  }
  return positions;
}

struct JointRadii {
  std::vector<double> radii;
  double rho = 0.04;
};

/// r_j = rho * |x_j - x_parent|. The root uses rho * |root offset| and falls
/// back to rho times its mean child bone length when that offset is zero.
JointRadii compute_radii(const SkeletonTopology& topology, const Positions<double>& positions, double rho = 0.04);

}  // namespace motionbridge
