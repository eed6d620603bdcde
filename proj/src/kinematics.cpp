#include "motionbridge/kinematics.hpp"

#include <cmath>

namespace motionbridge {

void SkeletonTopology::validate() const {
  const auto count = parents.size();
  if (count == 0) throw TopologyError("topology has no joints");
  if (local_offsets.size() != count) throw TopologyError("topology: offsets and parents differ in length");
  if (!joint_names.empty() && joint_names.size() != count) {
    throw TopologyError("topology: names and parents differ in length");
  }
  int roots = 0;
  for (std::size_t j = 0; j < count; ++j) {
    const int p = parents[j];
    if (p == -1) {
      ++roots;
    } else if (p < -1 || p >= static_cast<int>(j)) {
      throw TopologyError("topology: joint " + std::to_string(j) + " has parent " + std::to_string(p) +
                          "; parents must precede children");
    }
    if (!local_offsets[j].allFinite()) throw TopologyError("topology: non-finite offset at joint " + std::to_string(j));
  }
  if (roots != 1) throw TopologyError("topology: expected exactly one root, found " + std::to_string(roots));
}

std::vector<std::vector<int>> SkeletonTopology::children() const {
  std::vector<std::vector<int>> out(parents.size());
  for (std::size_t j = 0; j < parents.size(); ++j)
    if (parents[j] >= 0) out[parents[j]].push_back(static_cast<int>(j));
  return out;
}

std::vector<std::pair<int, int>> SkeletonTopology::bones() const {
  std::vector<std::pair<int, int>> out;
  for (std::size_t j = 0; j < parents.size(); ++j)
    if (parents[j] >= 0) out.emplace_back(parents[j], static_cast<int>(j));
  return out;
}

bool SkeletonTopology::same_structure(const SkeletonTopology& other) const { return parents == other.parents; }

JointRadii compute_radii(const SkeletonTopology& topology, const Positions<double>& positions, double rho) {
  if (!(rho > 0.0)) throw std::invalid_argument("compute_radii: rho must be positive");
  if (static_cast<std::size_t>(positions.rows()) != topology.joint_count()) {
    throw DimensionMismatch("compute_radii: positions and topology differ in joint count");
  }
  const auto kids = topology.children();
  JointRadii out;
  out.rho = rho;
  out.radii.resize(topology.joint_count());
  for (std::size_t j = 0; j < topology.joint_count(); ++j) {
    const int p = topology.parents[j];
    if (p >= 0) {
      out.radii[j] = rho * (positions.row(j) - positions.row(p)).norm();
      continue;
    }
    const double offset = topology.local_offsets[j].norm();
    if (offset > 0.0 || kids[j].empty()) {
      out.radii[j] = rho * offset;
    } else {
      double sum = 0.0;
      for (int c : kids[j]) sum += (positions.row(c) - positions.row(j)).norm();
      out.radii[j] = rho * sum / static_cast<double>(kids[j].size());
    }
  }
  return out;
}

}  // namespace motionbridge
