#include <doctest.h>

#include "test_support.hpp"

using namespace mbtest;

namespace {
const double kHalfSqrt2 = std::sqrt(2.0) / 2.0;
const Quat kQuarterZ(kHalfSqrt2, 0, 0, kHalfSqrt2);
}  // namespace

TEST_CASE("unit quaternion normalizes and rejects zero") {
  const Quat q(2, 0, 0, 0);
  CHECK(q.w() == doctest::Approx(1.0));
  CHECK(std::abs(Quat(1, 2, 3, 4).coeffs().norm() - 1.0) < 1e-12);
  CHECK_THROWS_AS(Quat(0, 0, 0, 0), SchemaError);
}

TEST_CASE("rotation_distance examples") {
  const Quat id = Quat::identity();
  CHECK(rotation_distance(id, id) == 0.0);
  std::mt19937_64 rng(3);
  for (int k = 0; k < 20; ++k) {
    const Quat q = random_quat(rng);
    CHECK(rotation_distance(q, -q) == 0.0);
    CHECK(rotation_distance(q, q) == 0.0);
  }
  CHECK(rotation_distance(id, kQuarterZ) == doctest::Approx(std::numbers::pi / 2).epsilon(1e-12));
}

TEST_CASE("rotation_distance is symmetric and bounded") {
  std::mt19937_64 rng(11);
  for (int k = 0; k < 200; ++k) {
    const Quat a = random_quat(rng), b = random_quat(rng);
    const double d = rotation_distance(a, b);
    CHECK(d >= 0.0);
    CHECK(d <= std::numbers::pi + 1e-12);
    CHECK(d == rotation_distance(b, a));
  }
}

TEST_CASE("rotation_distance triangle inequality over random triples") {
  std::mt19937_64 rng(17);
  int violations = 0;
  for (int k = 0; k < 2000; ++k) {
    const Quat a = random_quat(rng), b = random_quat(rng), c = random_quat(rng);
    if (rotation_distance(a, c) > rotation_distance(a, b) + rotation_distance(b, c) + 1e-9) ++violations;
  }
  CHECK(violations == 0);
}

TEST_CASE("pose_distance examples") {
  Pose a = identity_pose(4);
  Pose b = identity_pose(4, V3(3, 4, 0));
  CHECK(pose_distance(a, a) == 0.0);
  CHECK(pose_distance(a, b) == doctest::Approx(5.0));

  Pose c = identity_pose(4);
  c.rotations[2] = kQuarterZ;
  CHECK(pose_distance(a, c) == doctest::Approx(std::numbers::pi / 2));
  CHECK(pose_distance(a, c, MetricConfig{2.0}) == doctest::Approx(std::numbers::pi));

  CHECK_THROWS_AS(pose_distance(a, identity_pose(3)), DimensionMismatch);
}

TEST_CASE("pose_distance is exactly symmetric and sign-blind") {
  std::mt19937_64 rng(5);
  for (int k = 0; k < 50; ++k) {
    Pose a = random_pose(6, rng, 3.0), b = random_pose(6, rng, 3.0);
    a.root_translation = V3::Random();
    b.root_translation = V3::Random();
    CHECK(pose_distance(a, b) == pose_distance(b, a));
    Pose flipped = a;
    for (auto& q : flipped.rotations) q = -q;
    CHECK(pose_distance(a, flipped) == 0.0);
  }
}

TEST_CASE("slerp endpoints and midpoint") {
  const Quat id = Quat::identity();
  const Quat s0 = slerp(id, kQuarterZ, 0.0);
  CHECK((s0.coeffs() - id.coeffs()).norm() < 1e-15);
  const Quat s1 = slerp(id, kQuarterZ, 1.0);
  CHECK(std::abs(std::abs(s1.dot(kQuarterZ)) - 1.0) < 1e-15);

  // 45 degrees about z; composing two copies recovers the quarter turn.
  const Quat half = slerp(id, kQuarterZ, 0.5);
  CHECK(half.w() == doctest::Approx(std::cos(std::numbers::pi / 8)).epsilon(1e-12));
  CHECK(half.z() == doctest::Approx(std::sin(std::numbers::pi / 8)).epsilon(1e-12));
  CHECK(half.w() == doctest::Approx(0.92388).epsilon(1e-5));
  CHECK(half.z() == doctest::Approx(0.38268).epsilon(1e-5));
  CHECK(rotation_distance(half * half, kQuarterZ) < 1e-7);
}

TEST_CASE("slerp takes the short arc across hemispheres") {
  const Quat a = axis_angle(V3::UnitX(), 0.2);
  const Quat b = -axis_angle(V3::UnitX(), 0.6);
  const Quat mid = slerp(a, b, 0.5);
  CHECK(rotation_distance(mid, axis_angle(V3::UnitX(), 0.4)) < 1e-7);
}

TEST_CASE("slerp degenerate inputs fall back to linear interpolation") {
  const Quat a = axis_angle(V3::UnitY(), 0.3);
  const Quat b = axis_angle(V3::UnitY(), 0.3 + 1e-12);
  const Quat m = slerp(a, b, 0.5);
  CHECK(std::abs(m.coeffs().norm() - 1.0) < 1e-12);
  CHECK(rotation_distance(a, m) < 1e-7);
}

TEST_CASE("slerp geodesic proportionality") {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < 500; ++k) {
    const Quat a = random_quat(rng), b = random_quat(rng);
    const double tau = u(rng);
    CHECK(std::abs(rotation_distance(a, slerp(a, b, tau)) - tau * rotation_distance(a, b)) < 1e-6);
  }
}

TEST_CASE("interpolate_pose endpoints and root midpoint") {
  std::mt19937_64 rng(31);
  Pose s = random_pose(5, rng, 2.0), t = random_pose(5, rng, 2.0);
  s.root_translation = V3(0, 0, 0);
  t.root_translation = V3(2, 0, 0);

  const Pose at0 = interpolate_pose(s, t, 0.0);
  CHECK(at0.root_translation == s.root_translation);
  for (std::size_t j = 0; j < 5; ++j) CHECK(at0.rotations[j].coeffs() == s.rotations[j].coeffs());

  const Pose at1 = interpolate_pose(s, t, 1.0);
  CHECK(at1.root_translation == t.root_translation);
  for (std::size_t j = 0; j < 5; ++j) CHECK(at1.rotations[j].coeffs() == t.rotations[j].coeffs());

  const Pose mid = interpolate_pose(s, t, 0.5);
  CHECK((mid.root_translation - V3(1, 0, 0)).norm() < 1e-15);
  for (const auto& q : mid.rotations) CHECK(std::abs(q.coeffs().norm() - 1.0) < 1e-9);

  CHECK_THROWS_AS(interpolate_pose(s, identity_pose(4), 0.5), DimensionMismatch);
}

TEST_CASE("pose types work with long double") {
  using LQ = UnitQuaternion<long double>;
  const LQ a = LQ::identity();
  const LQ b(std::sqrt(0.5L), 0, 0, std::sqrt(0.5L));
  CHECK(static_cast<double>(rotation_distance(a, b)) == doctest::Approx(std::numbers::pi / 2));
  CHECK(static_cast<double>(slerp(a, b, 0.5L).z()) == doctest::Approx(std::sin(std::numbers::pi / 8)));
}
