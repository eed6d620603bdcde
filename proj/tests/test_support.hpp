#pragma once

// Fixtures shared by the unit and acceptance suites: skeletons, random
// rotations and poses, synthetic clips.

#include <cmath>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "motionbridge/collision.hpp"
#include "motionbridge/kinematics.hpp"
#include "motionbridge/pose.hpp"

namespace mbtest {

using namespace motionbridge;
using V3 = Vec3<double>;

inline Quat random_quat(std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  return Quat(g(rng), g(rng), g(rng), g(rng));
}

/// Rotation about a random axis by an angle uniform in [0, max_angle].
inline Quat random_small_quat(std::mt19937_64& rng, double max_angle) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.0, max_angle);
  V3 axis(g(rng), g(rng), g(rng));
  return Quat::from_axis_angle(axis, u(rng));
}

inline Quat axis_angle(const V3& axis, double angle) { return Quat::from_axis_angle(axis, angle); }

inline Pose identity_pose(std::size_t joints, const V3& root = V3::Zero()) {
  Pose p;
  p.root_translation = root;
  p.rotations.assign(joints, Quat::identity());
  return p;
}

/// Straight chain of `joints` joints along +z with unit bones.
inline SkeletonTopology chain_topology(int joints, const V3& bone = V3(0, 0, 1)) {
  SkeletonTopology t;
  for (int j = 0; j < joints; ++j) {
    t.joint_names.push_back("j" + std::to_string(j));
    t.parents.push_back(j - 1);
    t.local_offsets.push_back(j == 0 ? V3::Zero() : bone);
  }
  return t;
}

/// Twelve-joint humanoid-like test skeleton (meters), collision-free at rest.
inline SkeletonTopology humanoid12() {
  SkeletonTopology t;
  auto add = [&](const char* name, int parent, V3 off) {
    t.joint_names.emplace_back(name);
    t.parents.push_back(parent);
    t.local_offsets.push_back(off);
  };
  add("pelvis", -1, V3(0, 0, 0));
  add("spine", 0, V3(0, 0, 0.5));
  add("chest", 1, V3(0, 0, 0.5));
  add("head", 2, V3(0, 0, 0.4));
  add("l_shoulder", 2, V3(0.3, 0, 0.1));
  add("l_elbow", 4, V3(0.5, 0, 0));
  add("l_wrist", 5, V3(0.5, 0, 0));
  add("r_shoulder", 2, V3(-0.3, 0, 0.1));
  add("r_elbow", 7, V3(-0.5, 0, 0));
  add("r_wrist", 8, V3(-0.5, 0, 0));
  add("l_knee", 0, V3(0.2, 0, -0.9));
  add("r_knee", 0, V3(-0.2, 0, -0.9));
  return t;
}

inline Pose random_pose(std::size_t joints, std::mt19937_64& rng, double max_angle) {
  Pose p = identity_pose(joints);
  for (auto& q : p.rotations) q = random_small_quat(rng, max_angle);
  return p;
}

/// Random poses of `model` whose collision energy is at least `min_energy`.
inline std::vector<Pose> random_colliding_poses(const CollisionModel& model, std::size_t count, std::uint64_t seed,
                                                double max_angle = std::numbers::pi, double min_energy = 1e-8) {
  std::mt19937_64 rng(seed);
  std::vector<Pose> poses;
  while (poses.size() < count) {
    Pose p = random_pose(model.topology.joint_count(), rng, max_angle);
    if (total_energy(p, model).total >= min_energy) poses.push_back(std::move(p));
  }
  return poses;
}

/// Clip whose joints sweep smoothly with a phase offset; root walks along +x.
inline MotionClip sweep_clip(const std::string& name, std::size_t frames, std::size_t joints, double phase,
                             double amplitude = 0.8, double stride = 0.05) {
  MotionClip clip;
  clip.name = name;
  clip.fps = 30.0;
  for (std::size_t f = 0; f < frames; ++f) {
    const double s = static_cast<double>(f) / static_cast<double>(std::max<std::size_t>(frames - 1, 1));
    Pose p = identity_pose(joints, V3(stride * static_cast<double>(f), 0, 0));
    for (std::size_t j = 0; j < joints; ++j) {
      const V3 axis = j % 3 == 0 ? V3::UnitX() : (j % 3 == 1 ? V3::UnitY() : V3::UnitZ());
      p.rotations[j] = axis_angle(axis, amplitude * std::sin(2.0 * s + phase + 0.3 * static_cast<double>(j)));
    }
    clip.frames.push_back(std::move(p));
  }
  return clip;
}

}  // namespace mbtest
