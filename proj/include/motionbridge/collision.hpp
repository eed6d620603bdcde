#pragma once

// Sphere and capsule self-penetration energies over a posed skeleton.

#include <algorithm>
#include <cmath>
#include <set>
#include <utility>
#include <vector>

#include "motionbridge/kinematics.hpp"

namespace motionbridge {

template <typename Scalar>
struct ClosestPointResult {
  Scalar s = 0;  // parameter on the first segment
  Scalar t = 0;  // parameter on the second segment
  Scalar distance = 0;
};

/// Closest points between the closed segments [p1, q1] and [p2, q2].
///
/// Minimizes |w0 + s u - t v|^2 over the unit square with u = q1 - p1,
/// v = q2 - p2, w0 = p1 - p2. The stationary point s = (be - cd)/D,
/// t = (ae - bd)/D is clamped, t is re-solved against the clamped s, and if
/// t leaves [0, 1] it is clamped and s re-solved as (tb - d)/a. Near-parallel
/// pairs (D below 1e-9 relative to ac) start from s = 0 and alternate the
/// same one-dimensional solves. Zero-length segments degrade to points.
template <typename Scalar>
ClosestPointResult<Scalar> segment_distance(const Vec3<Scalar>& p1, const Vec3<Scalar>& q1, const Vec3<Scalar>& p2,
                                            const Vec3<Scalar>& q2) {
  constexpr Scalar kDegenerate = Scalar(1e-18);
  constexpr Scalar kParallel = Scalar(1e-9);
  const Vec3<Scalar> u = q1 - p1;
  const Vec3<Scalar> v = q2 - p2;
  const Vec3<Scalar> w0 = p1 - p2;
  const Scalar a = u.dot(u);
  const Scalar b = u.dot(v);
  const Scalar c = v.dot(v);
  const Scalar d = u.dot(w0);
  const Scalar e = v.dot(w0);
  auto unit = [](Scalar x) { return std::clamp(x, Scalar(0), Scalar(1)); };

  Scalar s = 0;
  Scalar t = 0;
  if (a <= kDegenerate && c <= kDegenerate) {
    // two points
  } else if (a <= kDegenerate) {
    t = unit(e / c);
  } else if (c <= kDegenerate) {
    s = unit(-d / a);
  } else {
    const Scalar det = a * c - b * b;
    if (det < kParallel * a * c) {
      t = unit(e / c);
      s = unit((t * b - d) / a);
      t = unit((s * b + e) / c);
    } else {
      s = unit((b * e - c * d) / det);
      t = (s * b + e) / c;
      if (t < Scalar(0) || t > Scalar(1)) {
        t = unit(t);
        s = unit((t * b - d) / a);
      }
    }
  }
  const Vec3<Scalar> gap = (p1 + s * u) - (p2 + t * v);
  return {s, t, gap.norm()};
}

/// Joint and bone pairs that never contribute energy.
struct ExclusionMasks {
  std::set<std::pair<int, int>> sphere_pairs_excluded;   // parent/child and grandparent/grandchild, i < j
  std::set<std::pair<int, int>> capsule_pairs_excluded;  // bones sharing a joint, i < j (bone indices)

  // Complement of the exclusions in fixed (i, j) lexicographic order.
  std::vector<std::pair<int, int>> sphere_pairs;
  std::vector<std::pair<int, int>> capsule_pairs;

  static ExclusionMasks build(const SkeletonTopology& topology);
};

struct EnergyReport {
  double sphere_energy = 0.0;
  double capsule_energy = 0.0;
  double total = 0.0;
  double lambda_capsule = 1.0;
};

double sphere_energy(const Positions<double>& positions, const JointRadii& radii, const ExclusionMasks& masks);

double capsule_energy(const Positions<double>& positions, const SkeletonTopology& topology, const JointRadii& radii,
                      const ExclusionMasks& masks);

/// Everything needed to score a pose: topology, masks and primitive sizing.
struct CollisionModel {
  SkeletonTopology topology;
  ExclusionMasks masks;
  double rho = 0.04;
  double lambda_capsule = 1.0;

  CollisionModel() = default;
  explicit CollisionModel(SkeletonTopology topo, double rho = 0.04, double lambda_capsule = 1.0);
};

EnergyReport total_energy(const Pose& pose, const SkeletonTopology& topology, double rho,
                          const ExclusionMasks& masks, double lambda_capsule = 1.0);

EnergyReport total_energy(const Pose& pose, const CollisionModel& model);

/// Total energy at the given positions together with dE/dx for every joint.
/// Radii are differentiated as functions of the positions.
EnergyReport energy_with_position_gradient(const Positions<double>& positions, const CollisionModel& model,
                                           Positions<double>& gradient);

}  // namespace motionbridge
