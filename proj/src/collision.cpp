#include "motionbridge/collision.hpp"

namespace motionbridge {

namespace {

using RowVec3 = Eigen::RowVector3d;

double hinge(double penetration) { return penetration > 0.0 ? penetration : 0.0; }

// Unit direction of a - b, or zero when the points coincide.
RowVec3 direction(const RowVec3& a, const RowVec3& b) {
  const RowVec3 diff = a - b;
  const double n = diff.norm();
  return n > 0.0 ? RowVec3(diff / n) : RowVec3::Zero();
}

// Adds coeff * dr_j/dx into the position gradient.
void accumulate_radius_gradient(int joint, double coeff, const Positions<double>& x, const CollisionModel& model,
                                const std::vector<std::vector<int>>& kids, Positions<double>& grad) {
  if (coeff == 0.0) return;
  const auto& topo = model.topology;
  const int p = topo.parents[joint];
  if (p >= 0) {
    const RowVec3 n = direction(x.row(joint), x.row(p));
    grad.row(joint) += coeff * model.rho * n;
    grad.row(p) -= coeff * model.rho * n;
    return;
  }
  if (topo.local_offsets[joint].norm() > 0.0 || kids[joint].empty()) return;
  const double share = model.rho / static_cast<double>(kids[joint].size());
  for (int c : kids[joint]) {
    const RowVec3 n = direction(x.row(c), x.row(joint));
    grad.row(c) += coeff * share * n;
    grad.row(joint) -= coeff * share * n;
  }
}

}  // namespace

ExclusionMasks ExclusionMasks::build(const SkeletonTopology& topology) {
  topology.validate();
  const auto& par = topology.parents;
  const int count = static_cast<int>(par.size());
  auto grandparent = [&](int j) { return par[j] >= 0 ? par[par[j]] : -1; };

  ExclusionMasks masks;
  for (int i = 0; i < count; ++i) {
    for (int j = i + 1; j < count; ++j) {
      const bool related = par[i] == j || par[j] == i || grandparent(i) == j || grandparent(j) == i;
      if (related) {
        masks.sphere_pairs_excluded.emplace(i, j);
      } else {
        masks.sphere_pairs.emplace_back(i, j);
      }
    }
  }
  const auto bones = topology.bones();
  const int nb = static_cast<int>(bones.size());
  for (int i = 0; i < nb; ++i) {
    for (int j = i + 1; j < nb; ++j) {
      const auto [a0, a1] = bones[i];
      const auto [b0, b1] = bones[j];
      const bool shared = a0 == b0 || a0 == b1 || a1 == b0 || a1 == b1;
      if (shared) {
        masks.capsule_pairs_excluded.emplace(i, j);
      } else {
        masks.capsule_pairs.emplace_back(i, j);
      }
    }
  }
  return masks;
}

double sphere_energy(const Positions<double>& positions, const JointRadii& radii, const ExclusionMasks& masks) {
  if (static_cast<std::size_t>(positions.rows()) != radii.radii.size()) {
    throw DimensionMismatch("sphere_energy: positions and radii differ in length");
  }
  double energy = 0.0;
  for (const auto& [i, j] : masks.sphere_pairs) {
    const double pen = hinge(radii.radii[i] + radii.radii[j] - (positions.row(i) - positions.row(j)).norm());
    energy += pen * pen;
  }
  return energy;
}

double capsule_energy(const Positions<double>& positions, const SkeletonTopology& topology, const JointRadii& radii,
                      const ExclusionMasks& masks) {
  if (static_cast<std::size_t>(positions.rows()) != topology.joint_count() ||
      radii.radii.size() != topology.joint_count()) {
    throw DimensionMismatch("capsule_energy: positions, radii and topology differ in joint count");
  }
  const auto bones = topology.bones();
  double energy = 0.0;
  for (const auto& [bi, bj] : masks.capsule_pairs) {
    const auto [pi, ci] = bones[bi];
    const auto [pj, cj] = bones[bj];
    const auto seg = segment_distance<double>(positions.row(pi).transpose(), positions.row(ci).transpose(),
                                              positions.row(pj).transpose(), positions.row(cj).transpose());
    const double pen = hinge(radii.radii[pi] + radii.radii[pj] - seg.distance);
    energy += pen * pen;
  }
  return energy;
}

CollisionModel::CollisionModel(SkeletonTopology topo, double rho_, double lambda)
    : topology(std::move(topo)), masks(ExclusionMasks::build(topology)), rho(rho_), lambda_capsule(lambda) {}

EnergyReport total_energy(const Pose& pose, const SkeletonTopology& topology, double rho,
                          const ExclusionMasks& masks, double lambda_capsule) {
  if (!(lambda_capsule >= 0.0)) throw std::invalid_argument("total_energy: lambda_capsule must be nonnegative");
  const Positions<double> x = forward_kinematics(topology, pose);
  const JointRadii radii = compute_radii(topology, x, rho);
  EnergyReport report;
  report.sphere_energy = sphere_energy(x, radii, masks);
  report.capsule_energy = capsule_energy(x, topology, radii, masks);
  report.lambda_capsule = lambda_capsule;
  report.total = report.sphere_energy + lambda_capsule * report.capsule_energy;
  return report;
}

EnergyReport total_energy(const Pose& pose, const CollisionModel& model) {
  return total_energy(pose, model.topology, model.rho, model.masks, model.lambda_capsule);
}

EnergyReport energy_with_position_gradient(const Positions<double>& x, const CollisionModel& model,
                                           Positions<double>& grad) {
  const auto& topo = model.topology;
  const JointRadii radii = compute_radii(topo, x, model.rho);
  const auto kids = topo.children();
  grad = Positions<double>::Zero(x.rows(), 3);

  // dE/dr per joint, pushed through the radius rule at the end.
  std::vector<double> radius_coeff(topo.joint_count(), 0.0);

  EnergyReport report;
  report.lambda_capsule = model.lambda_capsule;
  for (const auto& [i, j] : model.masks.sphere_pairs) {
    const double pen = hinge(radii.radii[i] + radii.radii[j] - (x.row(i) - x.row(j)).norm());
    if (pen <= 0.0) continue;
    report.sphere_energy += pen * pen;
    const RowVec3 n = direction(x.row(i), x.row(j));
    grad.row(i) -= 2.0 * pen * n;
    grad.row(j) += 2.0 * pen * n;
    radius_coeff[i] += 2.0 * pen;
    radius_coeff[j] += 2.0 * pen;
  }

  const auto bones = topo.bones();
  const double lam = model.lambda_capsule;
  for (const auto& [bi, bj] : model.masks.capsule_pairs) {
    const auto [pi, ci] = bones[bi];
    const auto [pj, cj] = bones[bj];
    const auto seg = segment_distance<double>(x.row(pi).transpose(), x.row(ci).transpose(), x.row(pj).transpose(),
                                              x.row(cj).transpose());
    const double pen = hinge(radii.radii[pi] + radii.radii[pj] - seg.distance);
    if (pen <= 0.0) continue;
    report.capsule_energy += pen * pen;
    // Envelope theorem: the closest-point parameters are held fixed.
    const RowVec3 on_i = (1.0 - seg.s) * x.row(pi) + seg.s * x.row(ci);
    const RowVec3 on_j = (1.0 - seg.t) * x.row(pj) + seg.t * x.row(cj);
    const RowVec3 n = direction(on_i, on_j);
    const double g = 2.0 * lam * pen;
    grad.row(pi) -= g * (1.0 - seg.s) * n;
    grad.row(ci) -= g * seg.s * n;
    grad.row(pj) += g * (1.0 - seg.t) * n;
    grad.row(cj) += g * seg.t * n;
    radius_coeff[pi] += g;
    radius_coeff[pj] += g;
  }

  for (std::size_t j = 0; j < topo.joint_count(); ++j) {
    accumulate_radius_gradient(static_cast<int>(j), radius_coeff[j], x, model, kids, grad);
  }
  report.total = report.sphere_energy + lam * report.capsule_energy;
  return report;
}

}  // namespace motionbridge
