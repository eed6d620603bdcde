#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "motionbridge/assignment.hpp"

using namespace motionbridge;

namespace {

Matrix random_plan(Eigen::Index n, Eigen::Index m, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Matrix g(n, m);
  for (Eigen::Index j = 0; j < m; ++j)
    for (Eigen::Index i = 0; i < n; ++i) g(i, j) = u(rng);
  return g / g.sum();
}

// Best score over every admissible hard assignment, summed in target order.
// N >= M: all injective target -> source maps. N < M: all permutations of
// the first M tiled virtual sources.
double brute_force_best(const Matrix& g) {
  const auto n = g.rows(), m = g.cols();
  double best = -1.0;
  if (n >= m) {
    std::vector<int> pick(static_cast<std::size_t>(n), 0);
    std::fill(pick.begin(), pick.begin() + m, 1);
    // Every M-subset of sources, then every ordering of it.
    std::sort(pick.begin(), pick.end());
    do {
      std::vector<Eigen::Index> chosen;
      for (Eigen::Index i = 0; i < n; ++i)
        if (pick[static_cast<std::size_t>(i)]) chosen.push_back(i);
      do {
        double s = 0.0;
        for (Eigen::Index t = 0; t < m; ++t) s += g(chosen[static_cast<std::size_t>(t)], t);
        best = std::max(best, s);
      } while (std::next_permutation(chosen.begin(), chosen.end()));
    } while (std::next_permutation(pick.begin(), pick.end()));
  } else {
    std::vector<Eigen::Index> virt(static_cast<std::size_t>(m));
    std::iota(virt.begin(), virt.end(), 0);
    do {
      double s = 0.0;
      for (Eigen::Index t = 0; t < m; ++t) s += g(virt[static_cast<std::size_t>(t)] % n, t);
      best = std::max(best, s);
    } while (std::next_permutation(virt.begin(), virt.end()));
  }
  return best;
}

}  // namespace

TEST_CASE("two by two example") {
  Matrix g(2, 2);
  g << 0.7, 0.3, 0.2, 0.8;
  const auto a = soft_to_hard(g);
  REQUIRE(a.pairs.size() == 2);
  CHECK(a.pairs[0] == AssignedPair{0, 0});
  CHECK(a.pairs[1] == AssignedPair{1, 1});
  CHECK(assignment_score(TransportPlan::uniform_marginals(g), a) == doctest::Approx(1.5).epsilon(1e-15));
}

TEST_CASE("diagonal-dominant square plan gives the identity") {
  Matrix g = Matrix::Constant(5, 5, 0.01);
  g.diagonal().setConstant(0.5);
  const auto a = soft_to_hard(g);
  CHECK(a.matrix == Eigen::MatrixXi::Identity(5, 5));
  Matrix d = Matrix::Zero(2, 2);
  d.diagonal().setConstant(0.5);
  CHECK(assignment_score(TransportPlan::uniform_marginals(d), soft_to_hard(d)) == 1.0);
}

TEST_CASE("uniform plan with fewer sources tiles deterministically") {
  const Matrix g = Matrix::Constant(2, 3, 1.0 / 6.0);
  const auto a = soft_to_hard(g);
  CHECK(a.source_for_target() == std::vector<Eigen::Index>{0, 1, 0});
  CHECK((a.matrix.colwise().sum().array() == 1).all());
  // Repeated calls agree.
  CHECK(soft_to_hard(g).matrix == a.matrix);
}

TEST_CASE("uniform square plan resolves ties to the identity") {
  const auto a = soft_to_hard(Matrix::Constant(4, 4, 1.0 / 16.0));
  CHECK(a.source_for_target() == std::vector<Eigen::Index>{0, 1, 2, 3});
}

TEST_CASE("linear assignment on a rectangular cost") {
  Matrix c(2, 4);
  c << 4, 1, 3, 9, 2, 0, 5, 1;
  // Optimal: row 0 -> col 1 (1) and row 1 -> col 3 (1), total 2.
  CHECK(solve_linear_assignment(c) == std::vector<Eigen::Index>{1, 3});
}

TEST_CASE("optimality against exhaustive enumeration") {
  std::mt19937_64 rng(77);
  std::uniform_int_distribution<int> size(1, 7);
  int cases = 0, tiled = 0;
  while (cases < 240) {
    const int n = size(rng), m = size(rng);
    const Matrix g = random_plan(n, m, rng);
    const auto a = soft_to_hard(g);
    const double got = assignment_score(TransportPlan::uniform_marginals(g), a);
    CHECK(got == doctest::Approx(brute_force_best(g)).epsilon(1e-13));
    ++cases;
    tiled += n < m ? 1 : 0;
  }
  CHECK(tiled > 40);
}

TEST_CASE("structural invariants") {
  std::mt19937_64 rng(5);
  for (int k = 0; k < 100; ++k) {
    const int n = 1 + k % 7, m = 1 + (k / 7) % 9;
    const auto a = soft_to_hard(random_plan(n, m, rng));
    REQUIRE(a.matrix.rows() == n);
    REQUIRE(a.matrix.cols() == m);
    CHECK((a.matrix.colwise().sum().array() == 1).all());
    CHECK(static_cast<int>(a.pairs.size()) == m);
    const Eigen::VectorXi uses = a.matrix.rowwise().sum();
    if (n >= m) {
      CHECK(uses.maxCoeff() <= 1);
    } else {
      CHECK(uses.maxCoeff() <= (m + n - 1) / n);
    }
    for (std::size_t t = 0; t < a.pairs.size(); ++t) CHECK(a.pairs[t].target == static_cast<Eigen::Index>(t));
  }
}

TEST_CASE("errors") {
  CHECK_THROWS_AS(soft_to_hard(Matrix(0, 3)), EmptyInput);
  const auto a = soft_to_hard(Matrix::Identity(3, 3));
  CHECK_THROWS_AS(assignment_score(TransportPlan::uniform_marginals(Matrix::Identity(2, 2)), a), DimensionMismatch);
}
