#pragma once

// Projection of a soft transport plan onto a hard assignment in which every
// target frame receives exactly one source frame.

#include <utility>
#include <vector>

#include "motionbridge/opw.hpp"

namespace motionbridge {

struct AssignedPair {
  Eigen::Index source = 0;
  Eigen::Index target = 0;

  friend bool operator==(const AssignedPair&, const AssignedPair&) = default;
};

struct AssignmentMatrix {
  Eigen::MatrixXi matrix;            // N x M, binary
  std::vector<AssignedPair> pairs;   // one per target, sorted by target

  /// Source frame assigned to each target frame.
  std::vector<Eigen::Index> source_for_target() const;
};

/// Minimum-cost assignment of every row of `cost` to a distinct column.
/// Requires rows <= cols. Among optimal solutions the one whose column
/// sequence (in row order) is lexicographically smallest is returned.
std::vector<Eigen::Index> solve_linear_assignment(const Matrix& cost);

/// Hard assignment maximizing the summed plan mass. N >= M assigns distinct
/// sources; N < M tiles the sources ceil(M/N) times and reuses them.
AssignmentMatrix soft_to_hard(const TransportPlan& plan);
AssignmentMatrix soft_to_hard(const Matrix& plan);

double assignment_score(const TransportPlan& plan, const AssignmentMatrix& assignment);

}  // namespace motionbridge
