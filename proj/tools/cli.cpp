#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <optional>

#include "motionbridge/motion_io.hpp"

namespace motionbridge::cli {

namespace fs = std::filesystem;

namespace {

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct AlignOptions {
  OpwParams opw;
  MetricConfig metric;
  bool log_domain = false;
  bool newton = false;
  bool raw_roots = false;

  void attach(CLI::App* cmd) {
    cmd->add_option("--lambda1", opw.lambda1, "inverse-difference-moment weight")->capture_default_str();
    cmd->add_option("--lambda2", opw.lambda2, "KL weight")->capture_default_str();
    cmd->add_option("--delta", opw.delta, "prior standard deviation")->capture_default_str();
    cmd->add_option("--max-iters", opw.max_iters, "Sinkhorn iterations")->capture_default_str();
    cmd->add_option("--tolerance", opw.tolerance, "early-stop L1 marginal violation (0 = run all)")
        ->capture_default_str();
    cmd->add_option("--w", metric.w, "rotation weight in the pose metric")->capture_default_str();
    cmd->add_flag("--log-domain", log_domain, "use log-domain Sinkhorn");
    cmd->add_flag("--newton", newton, "solve the scaling to convergence with Newton steps");
    cmd->add_flag("--raw-roots", raw_roots, "skip moving each clip's first root to the origin");
  }

  AlignmentResult align(const std::string& ref_path, const std::string& target_path) {
    if (log_domain) opw.mode = SinkhornMode::log_domain;
    if (newton) opw.mode = SinkhornMode::newton;
    const auto ref = read_any_clip(ref_path);
    const auto target = read_any_clip(target_path);
    if (raw_roots) return opw_align(ref.clip, target.clip, opw, metric);
    return opw_align(anchor_root(ref.clip), anchor_root(target.clip), opw, metric);
  }
};

void print_warnings(const LoadedClip& loaded, std::ostream& err) {
  for (const auto& w : loaded.warnings) err << "warning: " << w << "\n";
}

LoadedClip load_checked(const std::string& path, std::ostream& err) {
  auto loaded = read_any_clip(path);
  print_warnings(loaded, err);
  return loaded;
}

std::vector<MotionClip> load_references(const fs::path& dir, std::ostream& err) {
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const auto ext = entry.path().extension();
    if (entry.is_regular_file() && (ext == ".json" || ext == ".bvh")) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<MotionClip> clips;
  for (const auto& f : files) clips.push_back(load_checked(f.string(), err).clip);
  return clips;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Generate intermediate motion clips between reference clips and a target clip"};
  app.name("motionbridge");
  app.require_subcommand(1);

  // distance
  auto* distance_cmd = app.add_subcommand("distance", "OPW distance between two clips");
  std::string ref_path, target_path;
  AlignOptions distance_opts;
  distance_cmd->add_option("REF", ref_path)->required()->check(CLI::ExistingFile);
  distance_cmd->add_option("TARGET", target_path)->required()->check(CLI::ExistingFile);
  distance_opts.attach(distance_cmd);

  // align
  auto* align_cmd = app.add_subcommand("align", "write the OPW transport plan");
  AlignOptions align_opts;
  std::string plan_out;
  align_cmd->add_option("REF", ref_path)->required()->check(CLI::ExistingFile);
  align_cmd->add_option("TARGET", target_path)->required()->check(CLI::ExistingFile);
  align_cmd->add_option("--out", plan_out, "plan document path")->required();
  align_opts.attach(align_cmd);

  // project
  auto* project_cmd = app.add_subcommand("project", "hard-assign a plan document");
  std::string plan_in, assign_out;
  project_cmd->add_option("PLAN", plan_in)->required()->check(CLI::ExistingFile);
  project_cmd->add_option("--out", assign_out, "assignment document path")->required();

  // generate
  auto* generate_cmd = app.add_subcommand("generate", "run the full generation pipeline");
  std::string config_path;
  generate_cmd->add_option("--config", config_path, "run configuration")->required()->check(CLI::ExistingFile);

  // check / optimize share collision settings
  double rho = 0.04, lambda_capsule = 1.0, threshold = 1e-6;
  auto* check_cmd = app.add_subcommand("check", "per-frame collision energy report");
  std::string clip_path;
  check_cmd->add_option("POSE_CLIP", clip_path)->required()->check(CLI::ExistingFile);
  check_cmd->add_option("--rho", rho, "sphere radius scale")->capture_default_str();
  check_cmd->add_option("--lambda", lambda_capsule, "capsule energy weight")->capture_default_str();
  check_cmd->add_option("--threshold", threshold, "energy below which a frame passes")->capture_default_str();

  auto* optimize_cmd = app.add_subcommand("optimize", "remove self-collisions frame by frame");
  std::string clip_out;
  OptimizerConfig opt;
  bool analytic = false;
  optimize_cmd->add_option("POSE_CLIP", clip_path)->required()->check(CLI::ExistingFile);
  optimize_cmd->add_option("--out", clip_out, "output clip path")->required();
  optimize_cmd->add_option("--rho", rho, "sphere radius scale")->capture_default_str();
  optimize_cmd->add_option("--lambda", lambda_capsule, "capsule energy weight")->capture_default_str();
  optimize_cmd->add_option("--lr", opt.learning_rate, "learning rate")->capture_default_str();
  optimize_cmd->add_option("--steps", opt.max_steps, "maximum steps")->capture_default_str();
  optimize_cmd->add_option("--energy-stop", opt.energy_stop, "early-stop energy")->capture_default_str();
  optimize_cmd->add_flag("--analytic", analytic, "use the analytic gradient instead of finite differences");
  optimize_cmd->add_flag("--backtracking", opt.backtracking, "halve the step until the energy drops");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*distance_cmd) {
      const auto result = distance_opts.align(ref_path, target_path);
      out << "distance " << num(result.distance) << "\n";
      out << "marginal_error " << num(result.marginal_error) << "\n";
      out << "iterations " << result.iterations_used << "\n";
      return kExitOk;
    }
    if (*align_cmd) {
      const auto result = align_opts.align(ref_path, target_path);
      write_plan(plan_out, result);
      out << "wrote " << result.plan.rows() << "x" << result.plan.cols() << " plan to " << plan_out
          << " (distance " << num(result.distance) << ")\n";
      return kExitOk;
    }
    if (*project_cmd) {
      const TransportPlan plan = read_plan(plan_in);
      const AssignmentMatrix hard = soft_to_hard(plan);
      const double score = assignment_score(plan, hard);
      write_assignment(assign_out, hard, score);
      out << "wrote assignment of " << hard.pairs.size() << " targets to " << assign_out << " (score " << num(score)
          << ")\n";
      return kExitOk;
    }
    if (*generate_cmd) {
      const RunConfig rc = read_run_config(config_path);
      const LoadedClip target = load_checked(rc.target.string(), err);
      const SkeletonTopology topology = rc.topology ? read_topology(*rc.topology) : target.topology;
      const auto refs = load_references(rc.reference_dir, err);
      const GeneratedSet set = generate(refs, target.clip, topology, rc.generation);
      fs::create_directories(rc.output_dir);
      for (const auto& clip : set.clips) write_clip(rc.output_dir / (clip.name + ".json"), clip, topology);
      write_text_file(rc.output_dir / "manifest.json", serialize_manifest(set, rc.generation, target.clip.name));
      const auto flagged = set.flagged_frame_count();
      out << "generated " << set.clips.size() << " clips in " << rc.output_dir.string() << "\n";
      if (flagged > 0) {
        err << flagged << " frame(s) flagged: energy not driven below " << num(rc.generation.optimizer.energy_stop)
            << "\n";
        return kExitFlagged;
      }
      return kExitOk;
    }
    if (*check_cmd) {
      const LoadedClip loaded = load_checked(clip_path, err);
      const CollisionModel model(loaded.topology, rho, lambda_capsule);
      bool all_ok = true;
      out << "frame sphere capsule total\n";
      for (std::size_t f = 0; f < loaded.clip.size(); ++f) {
        const auto rep = total_energy(loaded.clip.frames[f], model);
        out << f << " " << num(rep.sphere_energy) << " " << num(rep.capsule_energy) << " " << num(rep.total) << "\n";
        all_ok = all_ok && rep.total < threshold;
      }
      return all_ok ? kExitOk : kExitFlagged;
    }
    if (*optimize_cmd) {
      if (analytic) opt.gradient_mode = GradientMode::analytic;
      LoadedClip loaded = load_checked(clip_path, err);
      const CollisionModel model(loaded.topology, rho, lambda_capsule);
      bool all_ok = true;
      out << "frame initial final steps\n";
      for (std::size_t f = 0; f < loaded.clip.size(); ++f) {
        try {
          auto result = optimize_pose(loaded.clip.frames[f], model, opt);
          out << f << " " << num(result.trace.initial_energy) << " " << num(result.trace.final_energy) << " "
              << result.trace.steps_taken << "\n";
          all_ok = all_ok && result.trace.final_energy < opt.energy_stop;
          loaded.clip.frames[f] = std::move(result.pose);
        } catch (const DivergenceError& e) {
          err << "frame " << f << ": " << e.what() << "\n";
          all_ok = false;
        }
      }
      write_clip(clip_out, loaded.clip, loaded.topology);
      return all_ok ? kExitOk : kExitFlagged;
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}

}  // namespace motionbridge::cli
