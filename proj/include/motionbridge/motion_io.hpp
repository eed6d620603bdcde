#pragma once

// On-disk formats: native JSON clip documents (topology embedded), a rigid
// Euler-channel BVH subset, plan/assignment matrix documents and run configs.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "motionbridge/pipeline.hpp"

namespace motionbridge {

inline constexpr const char* kClipFormat = "motionbridge.clip";
inline constexpr const char* kPlanFormat = "motionbridge.plan";
inline constexpr const char* kAssignmentFormat = "motionbridge.assignment";
inline constexpr const char* kManifestFormat = "motionbridge.manifest";
inline constexpr const char* kVersion = "1.0.0";

struct LoadedClip {
  MotionClip clip;
  SkeletonTopology topology;
  std::vector<std::string> warnings;
};

/// Structural fingerprint stored in MotionClip::topology_ref.
std::string topology_signature(const SkeletonTopology& topology);

/// Native document text <-> clip. Parsing renormalizes every quaternion and
/// warns when a norm is off by more than 1e-3.
LoadedClip parse_clip(const std::string& text, const std::string& origin = "<memory>");
std::string serialize_clip(const MotionClip& clip, const SkeletonTopology& topology);

LoadedClip read_clip(const std::filesystem::path& path);
void write_clip(const std::filesystem::path& path, const MotionClip& clip, const SkeletonTopology& topology);

/// Topology alone, from a native clip or a document carrying joints/parents/offsets.
SkeletonTopology read_topology(const std::filesystem::path& path);

/// BVH with Euler rotation channels in any order and position channels on the
/// root only. Angles are degrees; End Sites are dropped.
LoadedClip parse_bvh(const std::string& text, const std::string& name);
LoadedClip read_bvh_subset(const std::filesystem::path& path);

/// Writes ZXY rotation channels with the root's position channels.
std::string serialize_bvh(const MotionClip& clip, const SkeletonTopology& topology);
void write_bvh(const std::filesystem::path& path, const MotionClip& clip, const SkeletonTopology& topology);

/// Dispatches on extension: ".bvh" uses the BVH reader, anything else the native one.
LoadedClip read_any_clip(const std::filesystem::path& path);

std::string serialize_plan(const AlignmentResult& result);
TransportPlan parse_plan(const std::string& text);
void write_plan(const std::filesystem::path& path, const AlignmentResult& result);
TransportPlan read_plan(const std::filesystem::path& path);

std::string serialize_assignment(const AssignmentMatrix& assignment, double score);
AssignmentMatrix parse_assignment(const std::string& text);
void write_assignment(const std::filesystem::path& path, const AssignmentMatrix& assignment, double score);

struct RunConfig {
  GenerationConfig generation;
  std::filesystem::path reference_dir;
  std::filesystem::path target;
  std::optional<std::filesystem::path> topology;
  std::filesystem::path output_dir;
};

/// Relative paths resolve against the config file's directory.
RunConfig parse_run_config(const std::string& text, const std::filesystem::path& base_dir);
RunConfig read_run_config(const std::filesystem::path& path);

/// Shared JSON encodings for the parameter blocks, used by configs and manifests.
std::string serialize_generation_config(const GenerationConfig& cfg);

/// Manifest describing a generated set: config, version, per-clip provenance.
std::string serialize_manifest(const GeneratedSet& set, const GenerationConfig& cfg, const std::string& target_name);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace motionbridge
