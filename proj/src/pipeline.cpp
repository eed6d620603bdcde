#include "motionbridge/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <thread>

namespace motionbridge {

std::vector<double> GenerationConfig::default_tau_schedule(int count) {
  std::vector<double> taus;
  for (int k = 1; k <= count; ++k) taus.push_back(static_cast<double>(k) / static_cast<double>(count + 1));
  return taus;
}

void GenerationConfig::validate() const {
  if (q_nearest < 1) throw std::invalid_argument("config: q_nearest must be positive");
  if (samples_per_clip < 1) throw std::invalid_argument("config: samples_per_clip must be positive");
  if (static_cast<int>(tau_schedule.size()) != samples_per_clip) {
    throw std::invalid_argument("config: tau_schedule must have samples_per_clip entries");
  }
  for (std::size_t k = 0; k < tau_schedule.size(); ++k) {
    const double tau = tau_schedule[k];
    if (!(tau > 0.0 && tau < 1.0)) throw std::invalid_argument("config: tau values must lie in (0, 1)");
    if (k > 0 && !(tau > tau_schedule[k - 1])) {
      throw std::invalid_argument("config: tau_schedule must be strictly increasing");
    }
  }
  if (!(rho > 0.0)) throw std::invalid_argument("config: rho must be positive");
  if (!(lambda_capsule >= 0.0)) throw std::invalid_argument("config: lambda_capsule must be nonnegative");
  if (!(metric.w >= 0.0)) throw std::invalid_argument("config: metric weight must be nonnegative");
  if (workers < 1) throw std::invalid_argument("config: workers must be positive");
  opw.validate();
  optimizer.validate();
}

bool ClipProvenance::flagged() const {
  return std::any_of(frames.begin(), frames.end(), [](const FrameReport& f) { return f.flagged; });
}

std::size_t GeneratedSet::flagged_frame_count() const {
  std::size_t n = 0;
  for (const auto& p : provenance)
    n += static_cast<std::size_t>(std::count_if(p.frames.begin(), p.frames.end(), [](const FrameReport& f) { return f.flagged; }));
  return n;
}

MotionClip anchor_root(const MotionClip& clip, const Vec3<double>& anchor) {
  MotionClip out = clip;
  if (out.frames.empty()) return out;
  const Vec3<double> shift = anchor - clip.frames.front().root_translation;
  for (auto& f : out.frames) f.root_translation += shift;
  return out;
}

std::vector<RankedReference> rank_references(const std::vector<MotionClip>& refs, const MotionClip& target,
                                             const GenerationConfig& cfg) {
  if (refs.empty()) throw EmptyInput("rank_references: no reference clips");
  if (target.frames.empty()) throw EmptyInput("rank_references: empty target clip");
  const MotionClip anchored_target = anchor_root(target);

  std::vector<RankedReference> ranked;
  ranked.reserve(refs.size());
  for (const auto& ref : refs) {
    const bool ref_mismatch = !ref.topology_ref.empty() && !target.topology_ref.empty() &&
                              ref.topology_ref != target.topology_ref;
    if (ref.joint_count() != target.joint_count() || ref_mismatch) {
      throw TopologyError("reference clip '" + ref.name + "' does not share the target's topology");
    }
    ranked.push_back({&ref, opw_align(anchor_root(ref), anchored_target, cfg.opw, cfg.metric)});
  }
  std::stable_sort(ranked.begin(), ranked.end(), [](const RankedReference& a, const RankedReference& b) {
    if (a.alignment.distance != b.alignment.distance) return a.alignment.distance < b.alignment.distance;
    return a.clip->name < b.clip->name;
  });
  ranked.resize(std::min<std::size_t>(ranked.size(), static_cast<std::size_t>(cfg.q_nearest)));
  return ranked;
}

MotionClip sample_geodesic_clip(const MotionClip& reference, const MotionClip& target,
                                const std::vector<Eigen::Index>& source_for_target, double tau) {
  if (source_for_target.size() != target.size()) {
    throw DimensionMismatch("sample_geodesic_clip: assignment length differs from target length");
  }
  MotionClip out;
  out.name = generated_clip_name(reference.name, tau);
  out.fps = target.fps;
  out.topology_ref = target.topology_ref;
  out.frames.reserve(target.size());
  for (std::size_t m = 0; m < target.size(); ++m) {
    const auto n = static_cast<std::size_t>(source_for_target[m]);
    if (n >= reference.size()) throw DimensionMismatch("sample_geodesic_clip: source index out of range");
    out.frames.push_back(interpolate_pose(reference.frames[n], target.frames[m], tau));
  }
  return out;
}

std::string generated_clip_name(const std::string& reference, double tau) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", tau);
  return reference + "__tau" + buf;
}

namespace {

// Optimizes every frame in place. Frames are partitioned over workers but
// each result depends only on its own input, so the output is the same for
// any worker count.
std::vector<FrameReport> clean_frames(MotionClip& clip, const CollisionModel& model, const GenerationConfig& cfg) {
  std::vector<FrameReport> reports(clip.size());
  auto work = [&](std::size_t begin, std::size_t stride) {
    for (std::size_t m = begin; m < clip.size(); m += stride) {
      FrameReport& rep = reports[m];
      try {
        auto result = optimize_pose(clip.frames[m], model, cfg.optimizer);
        rep.initial_energy = result.trace.initial_energy;
        rep.final_energy = result.trace.final_energy;
        rep.steps_taken = result.trace.steps_taken;
        rep.flagged = !(result.trace.final_energy < cfg.optimizer.energy_stop);
        clip.frames[m] = std::move(result.pose);
      } catch (const DivergenceError& e) {
        rep.initial_energy = e.trace().initial_energy;
        rep.final_energy = e.trace().final_energy;
        rep.steps_taken = e.trace().steps_taken;
        rep.flagged = true;
      }
    }
  };
  const auto workers = static_cast<std::size_t>(std::max(1, cfg.workers));
  if (workers == 1 || clip.size() < 2) {
    work(0, 1);
    return reports;
  }
  std::vector<std::jthread> pool;
  for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work, w, workers);
  return reports;
}

}  // namespace

GeneratedSet generate(const std::vector<MotionClip>& refs, const MotionClip& target,
                      const SkeletonTopology& topology, const GenerationConfig& cfg) {
  cfg.validate();
  topology.validate();
  if (target.joint_count() != topology.joint_count()) {
    throw DimensionMismatch("generate: target clip does not match the topology");
  }
  const CollisionModel model(topology, cfg.rho, cfg.lambda_capsule);
  const auto ranked = rank_references(refs, target, cfg);
  const Vec3<double> target_origin = target.frames.front().root_translation;

  GeneratedSet out;
  for (const auto& entry : ranked) {
    const AssignmentMatrix hard = soft_to_hard(entry.alignment.plan);
    const auto sources = hard.source_for_target();
    // Reference placed so its first root coincides with the target's.
    const MotionClip placed = anchor_root(*entry.clip, target_origin);
    for (double tau : cfg.tau_schedule) {
      MotionClip clip = sample_geodesic_clip(placed, target, sources, tau);
      ClipProvenance prov;
      prov.source_clip = entry.clip->name;
      prov.tau = tau;
      prov.opw_distance = entry.alignment.distance;
      prov.pairs = hard.pairs;
      prov.frames = clean_frames(clip, model, cfg);
      out.clips.push_back(std::move(clip));
      out.provenance.push_back(std::move(prov));
    }
  }
  return out;
}

}  // namespace motionbridge
