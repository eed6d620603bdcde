#include "motionbridge/assignment.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <string>

namespace motionbridge {

namespace {

struct Potentials {
  std::vector<Eigen::Index> col_of_row;
  Vector u;  // row potentials
  Vector v;  // column potentials
};

// Shortest augmenting path Hungarian method on a square matrix; leaves dual
// potentials with cost(i,j) - u[i] - v[j] >= 0, tight on matched edges.
Potentials hungarian_square(const Matrix& cost) {
  const Eigen::Index n = cost.rows();
  const double inf = std::numeric_limits<double>::infinity();
  // 1-based working arrays; index 0 is the virtual start node.
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<Eigen::Index> match(n + 1, 0), way(n + 1, 0);
  for (Eigen::Index i = 1; i <= n; ++i) {
    match[0] = i;
    Eigen::Index j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const Eigen::Index i0 = match[j0];
      double delta = inf;
      Eigen::Index j1 = 0;
      for (Eigen::Index j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (Eigen::Index j = 0; j <= n; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (match[j0] != 0);
    do {
      const Eigen::Index j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  Potentials out;
  out.col_of_row.assign(n, -1);
  out.u.resize(n);
  out.v.resize(n);
  for (Eigen::Index j = 1; j <= n; ++j) out.col_of_row[match[j] - 1] = j - 1;
  for (Eigen::Index i = 0; i < n; ++i) {
    out.u[i] = u[i + 1];
    out.v[i] = v[i + 1];
  }
  return out;
}

// Every optimal assignment is a perfect matching on the tight edges of an
// optimal dual. Walk the rows in order and give each the smallest column
// that still leaves a perfect tight matching for the remaining rows.
void lexicographic_refine(const Matrix& cost, Potentials& pot) {
  const Eigen::Index n = cost.rows();
  const double scale = std::max(1e-300, cost.cwiseAbs().maxCoeff());
  const double tol = 64.0 * std::numeric_limits<double>::epsilon() * scale * static_cast<double>(n);
  auto tight = [&](Eigen::Index i, Eigen::Index j) { return cost(i, j) - pot.u[i] - pot.v[j] <= tol; };

  std::vector<Eigen::Index>& col_of = pot.col_of_row;
  std::vector<Eigen::Index> row_of(n);
  for (Eigen::Index i = 0; i < n; ++i) row_of[col_of[i]] = i;

  std::vector<Eigen::Index> next(n);
  std::vector<char> releasable(n);
  std::vector<Eigen::Index> queue;
  queue.reserve(n);
  for (Eigen::Index r = 0; r < n; ++r) {
    const Eigen::Index home = col_of[r];
    // Rows that can shift along tight edges so that `home` ends up free.
    std::fill(releasable.begin(), releasable.end(), 0);
    queue.assign(1, home);
    for (std::size_t head = 0; head < queue.size(); ++head) {
      const Eigen::Index col = queue[head];
      for (Eigen::Index x = r + 1; x < n; ++x) {
        if (releasable[x] || col_of[x] == col || !tight(x, col)) continue;
        releasable[x] = 1;
        next[x] = col;
        queue.push_back(col_of[x]);
      }
    }
    for (Eigen::Index c = 0; c < home; ++c) {
      const Eigen::Index owner = row_of[c];
      if (owner <= r || !releasable[owner] || !tight(r, c)) continue;
      std::vector<std::pair<Eigen::Index, Eigen::Index>> moves{{r, c}};
      for (Eigen::Index x = owner;;) {
        const Eigen::Index dest = next[x];
        moves.emplace_back(x, dest);
        if (dest == home) break;
        x = row_of[dest];
      }
      for (const auto& [row, col] : moves) {
        col_of[row] = col;
        row_of[col] = row;
      }
      break;
    }
  }
}

}  // namespace

std::vector<Eigen::Index> AssignmentMatrix::source_for_target() const {
  std::vector<Eigen::Index> out(pairs.size());
  for (const auto& p : pairs) out[p.target] = p.source;
  return out;
}

std::vector<Eigen::Index> solve_linear_assignment(const Matrix& cost) {
  if (cost.size() == 0) throw EmptyInput("linear assignment: empty cost matrix");
  if (cost.rows() > cost.cols()) {
    throw DimensionMismatch("linear assignment: more rows than columns");
  }
  if (!cost.allFinite()) throw std::invalid_argument("linear assignment: non-finite cost");
  // Zero-cost dummy rows square the problem without changing its optimum.
  Matrix square = Matrix::Zero(cost.cols(), cost.cols());
  square.topRows(cost.rows()) = cost;
  Potentials pot = hungarian_square(square);
  lexicographic_refine(square, pot);
  pot.col_of_row.resize(cost.rows());
  return pot.col_of_row;
}

AssignmentMatrix soft_to_hard(const Matrix& plan) {
  if (plan.size() == 0) throw EmptyInput("soft_to_hard: empty plan");
  if (!plan.allFinite() || (plan.array() < 0.0).any()) {
    throw std::invalid_argument("soft_to_hard: plan entries must be finite and nonnegative");
  }
  const Eigen::Index n = plan.rows();
  const Eigen::Index m = plan.cols();

  // Targets are assigned to sources, so the problem is posed on -plan^T.
  std::vector<Eigen::Index> chosen;
  if (n >= m) {
    chosen = solve_linear_assignment(-plan.transpose());
  } else {
    // Virtual source k stands for real source k mod N; only the first M
    // virtual rows of the tiled matrix are kept.
    Matrix tiled(m, m);
    for (Eigen::Index k = 0; k < m; ++k) tiled.col(k) = -plan.row(k % n).transpose();
    chosen = solve_linear_assignment(tiled);
    for (auto& k : chosen) k %= n;
  }

  AssignmentMatrix out;
  out.matrix = Eigen::MatrixXi::Zero(n, m);
  out.pairs.reserve(m);
  for (Eigen::Index t = 0; t < m; ++t) {
    out.matrix(chosen[t], t) = 1;
    out.pairs.push_back({chosen[t], t});
  }
  return out;
}

AssignmentMatrix soft_to_hard(const TransportPlan& plan) { return soft_to_hard(plan.matrix); }

double assignment_score(const TransportPlan& plan, const AssignmentMatrix& assignment) {
  if (plan.rows() != assignment.matrix.rows() || plan.cols() != assignment.matrix.cols()) {
    throw DimensionMismatch("assignment_score: plan is " + std::to_string(plan.rows()) + "x" +
                            std::to_string(plan.cols()) + " but assignment is " +
                            std::to_string(assignment.matrix.rows()) + "x" +
                            std::to_string(assignment.matrix.cols()));
  }
  double score = 0.0;
  for (Eigen::Index t = 0; t < plan.cols(); ++t)
    for (Eigen::Index s = 0; s < plan.rows(); ++s)
      if (assignment.matrix(s, t) != 0) score += plan.matrix(s, t);
  return score;
}

}  // namespace motionbridge
