#pragma once

// Reference ranking, hard frame assignment, geodesic sampling and
// collision cleanup, end to end.

#include <cstdint>
#include <string>
#include <vector>

#include "motionbridge/assignment.hpp"
#include "motionbridge/optimizer.hpp"

namespace motionbridge {

struct GenerationConfig {
  int q_nearest = 10;
  int samples_per_clip = 6;
  std::vector<double> tau_schedule = default_tau_schedule(6);
  OpwParams opw;
  MetricConfig metric;
  OptimizerConfig optimizer;
  double rho = 0.04;
  double lambda_capsule = 1.0;
  std::uint64_t seed = 0;
  int workers = 1;  // frame optimizations run in parallel; output does not depend on this

  /// k / (count + 1) for k = 1..count.
  static std::vector<double> default_tau_schedule(int count);

  void validate() const;
};

struct RankedReference {
  const MotionClip* clip = nullptr;
  AlignmentResult alignment;
};

/// Frame-level record of the collision cleanup.
struct FrameReport {
  double initial_energy = 0.0;
  double final_energy = 0.0;
  int steps_taken = 0;
  bool flagged = false;
};

struct ClipProvenance {
  std::string source_clip;
  double tau = 0.0;
  double opw_distance = 0.0;
  std::vector<AssignedPair> pairs;
  std::vector<FrameReport> frames;

  bool flagged() const;
};

struct GeneratedSet {
  std::vector<MotionClip> clips;
  std::vector<ClipProvenance> provenance;  // parallel to clips

  std::size_t flagged_frame_count() const;
};

/// Copy of `clip` translated so its first-frame root is at `anchor`.
MotionClip anchor_root(const MotionClip& clip, const Vec3<double>& anchor = Vec3<double>::Zero());

/// Aligns every reference against the target (both root-anchored at the
/// origin) and keeps the min(Q, |refs|) closest, ties ordered by name.
std::vector<RankedReference> rank_references(const std::vector<MotionClip>& refs, const MotionClip& target,
                                             const GenerationConfig& cfg);

/// Interpolated clip at parameter tau, before any optimization: target
/// frame m is paired with reference frame source_for_target[m].
MotionClip sample_geodesic_clip(const MotionClip& reference, const MotionClip& target,
                                const std::vector<Eigen::Index>& source_for_target, double tau);

/// Clip name for a generated sample, e.g. "walk_03__tau0.2857".
std::string generated_clip_name(const std::string& reference, double tau);

GeneratedSet generate(const std::vector<MotionClip>& refs, const MotionClip& target,
                      const SkeletonTopology& topology, const GenerationConfig& cfg);

}  // namespace motionbridge
