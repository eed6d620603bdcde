#include <doctest.h>

#include "motionbridge/optimizer.hpp"
#include "test_support.hpp"

using namespace mbtest;

namespace {

// Left arm swung across the chest so the upper arm passes through the
// right shoulder.
Pose crossed_arm_pose() {
  Pose p = identity_pose(12);
  p.rotations[4] = axis_angle(V3::UnitZ(), 0.97 * std::numbers::pi);
  return p;
}

}  // namespace

TEST_CASE("config defaults and validation") {
  const OptimizerConfig cfg;
  CHECK(cfg.learning_rate == 0.05);
  CHECK(cfg.max_steps == 120);
  CHECK(cfg.energy_stop == 1e-6);
  OptimizerConfig bad;
  bad.learning_rate = 0.0;
  CHECK_THROWS(bad.validate());
  bad = {};
  bad.max_steps = 0;
  CHECK_THROWS(optimize_pose(identity_pose(12), CollisionModel(humanoid12()), bad));
}

TEST_CASE("rotation matrix derivatives match finite differences") {
  std::mt19937_64 rng(2);
  for (int k = 0; k < 20; ++k) {
    const Vec4<double> q = random_quat(rng).coeffs();
    const auto d = rotation_matrix_derivatives(q);
    for (int i = 0; i < 4; ++i) {
      Vec4<double> a = q, b = q;
      a[i] += 1e-6;
      b[i] -= 1e-6;
      const Mat3<double> fd = (Quat::quaternion_to_matrix(a) - Quat::quaternion_to_matrix(b)) / 2e-6;
      CHECK((fd - d[i]).cwiseAbs().maxCoeff() < 1e-8);
    }
  }
}

TEST_CASE("collision-free pose has zero gradient") {
  const CollisionModel model(humanoid12());
  for (auto mode : {GradientMode::analytic, GradientMode::finite_difference}) {
    for (const auto& g : energy_gradient(identity_pose(12), model, mode)) CHECK(g.norm() == 0.0);
  }
}

TEST_CASE("analytic gradient agrees with central differences") {
  const CollisionModel model(humanoid12());
  int checked = 0;
  for (const auto& p : random_colliding_poses(model, 30, 101)) {
    const auto a = energy_gradient(p, model, GradientMode::analytic);
    const auto f = energy_gradient(p, model, GradientMode::finite_difference, 1e-6);
    for (std::size_t j = 0; j < a.size(); ++j) {
      for (int i = 0; i < 4; ++i) {
        CHECK(std::abs(a[j][i] - f[j][i]) <= 1e-3 * std::abs(f[j][i]) + 1e-8);
        ++checked;
      }
    }
  }
  CHECK(checked == 30 * 12 * 4);
}

TEST_CASE("gradients are tangent to the unit sphere") {
  const CollisionModel model(humanoid12());
  for (const auto& p : random_colliding_poses(model, 5, 3)) {
    for (auto mode : {GradientMode::analytic, GradientMode::finite_difference}) {
      const auto g = energy_gradient(p, model, mode);
      for (std::size_t j = 0; j < g.size(); ++j) CHECK(std::abs(g[j].dot(p.rotations[j].coeffs())) < 1e-9);
    }
  }
}

TEST_CASE("a small step against the gradient lowers the energy") {
  const CollisionModel model(humanoid12());
  const Pose p = crossed_arm_pose();
  const double e0 = total_energy(p, model).total;
  REQUIRE(e0 > 0.0);
  const auto g = energy_gradient(p, model, GradientMode::analytic);
  Pose q = p;
  for (std::size_t j = 0; j < g.size(); ++j) q.rotations[j] = Quat(Vec4<double>(p.rotations[j].coeffs() - 0.01 * g[j]));
  CHECK(total_energy(q, model).total < e0);
}

TEST_CASE("zero-energy input is returned unchanged") {
  const CollisionModel model(humanoid12());
  const Pose rest = identity_pose(12, V3(1, 2, 3));
  const auto r = optimize_pose(rest, model);
  CHECK(r.trace.converged_early);
  CHECK(r.trace.steps_taken == 0);
  CHECK(r.trace.energy_history.size() == 1);
  CHECK(r.pose.root_translation == rest.root_translation);
  for (std::size_t j = 0; j < 12; ++j) CHECK(r.pose.rotations[j].coeffs() == rest.rotations[j].coeffs());
}

TEST_CASE("crossed arm converges with default settings") {
  const CollisionModel model(humanoid12());
  Pose p = crossed_arm_pose();
  p.root_translation = V3(0.5, -1, 0);
  const auto r = optimize_pose(p, model);
  CHECK(r.trace.initial_energy > 1e-5);
  CHECK(r.trace.final_energy < 1e-6);
  CHECK(r.trace.steps_taken <= 120);
  CHECK(r.trace.final_energy == r.trace.energy_history.back());
  CHECK(r.trace.max_norm_error < 1e-9);
  CHECK(r.pose.root_translation == p.root_translation);
}

TEST_CASE("trace invariants on random colliding poses") {
  const CollisionModel model(humanoid12());
  for (const auto& p : random_colliding_poses(model, 10, 55, std::numbers::pi, 1e-4)) {
    OptimizerConfig cfg;
    cfg.gradient_mode = GradientMode::analytic;
    const auto r = optimize_pose(p, model, cfg);
    CHECK(r.trace.steps_taken <= cfg.max_steps);
    CHECK(r.trace.energy_history.size() == static_cast<std::size_t>(r.trace.steps_taken) + 1);
    CHECK(r.trace.energy_history.front() == r.trace.initial_energy);
    CHECK(r.trace.final_energy == r.trace.energy_history.back());
    CHECK(r.trace.max_norm_error < 1e-9);
    CHECK(r.trace.final_energy <= 0.01 * r.trace.initial_energy);
  }
}

TEST_CASE("backtracking never increases the energy") {
  const CollisionModel model(humanoid12());
  OptimizerConfig cfg;
  cfg.backtracking = true;
  cfg.learning_rate = 2.0;
  for (const auto& p : random_colliding_poses(model, 5, 77, std::numbers::pi, 1e-4)) {
    const auto r = optimize_pose(p, model, cfg);
    for (std::size_t k = 1; k < r.trace.energy_history.size(); ++k)
      CHECK(r.trace.energy_history[k] <= r.trace.energy_history[k - 1]);
  }
}

TEST_CASE("optimization is deterministic") {
  const CollisionModel model(humanoid12());
  const Pose p = random_colliding_poses(model, 1, 9, std::numbers::pi, 1e-4).front();
  const auto a = optimize_pose(p, model);
  const auto b = optimize_pose(p, model);
  CHECK(a.trace.energy_history == b.trace.energy_history);
  for (std::size_t j = 0; j < 12; ++j) CHECK(a.pose.rotations[j].coeffs() == b.pose.rotations[j].coeffs());
}
