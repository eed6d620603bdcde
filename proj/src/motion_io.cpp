#include "motionbridge/motion_io.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

namespace motionbridge {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr double kNormWarning = 1e-3;

json parse_json(const std::string& text, const std::string& origin) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(origin + ": " + e.what());
  }
}

const json& require(const json& obj, const char* key, const std::string& where) {
  if (!obj.is_object() || !obj.contains(key)) throw SchemaError(where + ": missing field '" + key + "'");
  return obj.at(key);
}

double as_number(const json& v, const std::string& where) {
  if (!v.is_number()) throw SchemaError(where + ": expected a number");
  return v.get<double>();
}

long long as_integer(const json& v, const std::string& where) {
  if (!v.is_number_integer()) throw SchemaError(where + ": expected an integer");
  return v.get<long long>();
}

std::string as_string(const json& v, const std::string& where) {
  if (!v.is_string()) throw SchemaError(where + ": expected a string");
  return v.get<std::string>();
}

template <int N>
Eigen::Matrix<double, N, 1> as_vector(const json& v, const std::string& where) {
  if (!v.is_array() || v.size() != N) {
    throw SchemaError(where + ": expected " + std::to_string(N) + " components, got " +
                      (v.is_array() ? std::to_string(v.size()) : std::string("a non-array")));
  }
  Eigen::Matrix<double, N, 1> out;
  for (int i = 0; i < N; ++i) out[i] = as_number(v[i], where);
  return out;
}

void check_format(const json& doc, const char* expected, const std::string& origin) {
  if (!doc.is_object()) throw SchemaError(origin + ": document must be an object");
  if (doc.contains("format") && doc["format"] != expected) {
    throw SchemaError(origin + ": expected format '" + expected + "', found " + doc["format"].dump());
  }
}

SkeletonTopology topology_from_json(const json& doc, const std::string& origin) {
  const json& joints = require(doc, "joints", origin);
  const json& parents = require(doc, "parents", origin);
  const json& offsets = require(doc, "offsets", origin);
  if (!joints.is_array() || !parents.is_array() || !offsets.is_array()) {
    throw SchemaError(origin + ": joints, parents and offsets must be arrays");
  }
  if (joints.size() != parents.size() || joints.size() != offsets.size()) {
    throw SchemaError(origin + ": joints (" + std::to_string(joints.size()) + "), parents (" +
                      std::to_string(parents.size()) + ") and offsets (" + std::to_string(offsets.size()) +
                      ") must have equal length");
  }
  SkeletonTopology topo;
  for (std::size_t j = 0; j < joints.size(); ++j) {
    const std::string where = origin + ": joint " + std::to_string(j);
    topo.joint_names.push_back(as_string(joints[j], where + " name"));
    topo.parents.push_back(static_cast<int>(as_integer(parents[j], where + " parent")));
    topo.local_offsets.push_back(as_vector<3>(offsets[j], where + " offset"));
  }
  try {
    topo.validate();
  } catch (const TopologyError& e) {
    throw SchemaError(origin + ": " + e.what());
  }
  return topo;
}

json topology_to_json(const SkeletonTopology& topo) {
  json joints = json::array(), parents = json::array(), offsets = json::array();
  for (std::size_t j = 0; j < topo.joint_count(); ++j) {
    joints.push_back(j < topo.joint_names.size() ? topo.joint_names[j] : "joint" + std::to_string(j));
    parents.push_back(topo.parents[j]);
    const auto& o = topo.local_offsets[j];
    offsets.push_back({o.x(), o.y(), o.z()});
  }
  return {{"joints", joints}, {"parents", parents}, {"offsets", offsets}};
}

const char* mode_name(SinkhornMode m) {
  switch (m) {
    case SinkhornMode::standard: return "standard";
    case SinkhornMode::log_domain: return "log_domain";
    case SinkhornMode::newton: return "newton";
  }
  return "standard";
}

json opw_to_json(const OpwParams& p) {
  return {{"lambda1", p.lambda1},
          {"lambda2", p.lambda2},
          {"delta", p.delta},
          {"max_iters", p.max_iters},
          {"tolerance", p.tolerance},
          {"prior", p.prior == PriorKind::gaussian ? "gaussian" : "uniform"},
          {"mode", mode_name(p.mode)},
          {"relaxation", p.relaxation}};
}

json optimizer_to_json(const OptimizerConfig& o) {
  return {{"learning_rate", o.learning_rate},
          {"max_steps", o.max_steps},
          {"energy_stop", o.energy_stop},
          {"gradient_mode", o.gradient_mode == GradientMode::analytic ? "analytic" : "finite_difference"},
          {"fd_step", o.fd_step},
          {"backtracking", o.backtracking}};
}

json generation_to_json(const GenerationConfig& cfg) {
  return {{"q_nearest", cfg.q_nearest},
          {"samples_per_clip", cfg.samples_per_clip},
          {"tau_schedule", cfg.tau_schedule},
          {"opw", opw_to_json(cfg.opw)},
          {"metric", {{"w", cfg.metric.w}}},
          {"optimizer", optimizer_to_json(cfg.optimizer)},
          {"rho", cfg.rho},
          {"lambda_capsule", cfg.lambda_capsule},
          {"seed", cfg.seed},
          {"workers", cfg.workers}};
}

void reject_unknown(const json& obj, const std::set<std::string>& known, const std::string& where) {
  for (const auto& [key, _] : obj.items()) {
    if (!known.contains(key)) throw SchemaError(where + ": unknown field '" + key + "'");
  }
}

OpwParams opw_from_json(const json& j, OpwParams p) {
  reject_unknown(j, {"lambda1", "lambda2", "delta", "max_iters", "tolerance", "prior", "mode", "relaxation"},
                "config.opw");
  if (j.contains("lambda1")) p.lambda1 = as_number(j["lambda1"], "opw.lambda1");
  if (j.contains("lambda2")) p.lambda2 = as_number(j["lambda2"], "opw.lambda2");
  if (j.contains("delta")) p.delta = as_number(j["delta"], "opw.delta");
  if (j.contains("max_iters")) p.max_iters = static_cast<int>(as_integer(j["max_iters"], "opw.max_iters"));
  if (j.contains("tolerance")) p.tolerance = as_number(j["tolerance"], "opw.tolerance");
  if (j.contains("relaxation")) p.relaxation = as_number(j["relaxation"], "opw.relaxation");
  if (j.contains("prior")) {
    const auto s = as_string(j["prior"], "opw.prior");
    if (s == "gaussian") p.prior = PriorKind::gaussian;
    else if (s == "uniform") p.prior = PriorKind::uniform;
    else throw SchemaError("opw.prior: expected 'gaussian' or 'uniform'");
  }
  if (j.contains("mode")) {
    const auto s = as_string(j["mode"], "opw.mode");
    if (s == "standard") p.mode = SinkhornMode::standard;
    else if (s == "log_domain") p.mode = SinkhornMode::log_domain;
    else if (s == "newton") p.mode = SinkhornMode::newton;
    else throw SchemaError("opw.mode: expected 'standard', 'log_domain' or 'newton'");
  }
  return p;
}

OptimizerConfig optimizer_from_json(const json& j, OptimizerConfig o) {
  reject_unknown(j, {"learning_rate", "max_steps", "energy_stop", "gradient_mode", "fd_step", "backtracking"},
                 "config.optimizer");
  if (j.contains("learning_rate")) o.learning_rate = as_number(j["learning_rate"], "optimizer.learning_rate");
  if (j.contains("max_steps")) o.max_steps = static_cast<int>(as_integer(j["max_steps"], "optimizer.max_steps"));
  if (j.contains("energy_stop")) o.energy_stop = as_number(j["energy_stop"], "optimizer.energy_stop");
  if (j.contains("fd_step")) o.fd_step = as_number(j["fd_step"], "optimizer.fd_step");
  if (j.contains("backtracking")) {
    if (!j["backtracking"].is_boolean()) throw SchemaError("optimizer.backtracking: expected a boolean");
    o.backtracking = j["backtracking"].get<bool>();
  }
  if (j.contains("gradient_mode")) {
    const auto s = as_string(j["gradient_mode"], "optimizer.gradient_mode");
    if (s == "analytic") o.gradient_mode = GradientMode::analytic;
    else if (s == "finite_difference") o.gradient_mode = GradientMode::finite_difference;
    else throw SchemaError("optimizer.gradient_mode: expected 'analytic' or 'finite_difference'");
  }
  return o;
}

// --- BVH -----------------------------------------------------------------

enum class Channel { x_pos, y_pos, z_pos, x_rot, y_rot, z_rot };

struct BvhJoint {
  std::string name;
  int parent = -1;
  Vec3<double> offset = Vec3<double>::Zero();
  std::vector<Channel> channels;
};

class BvhTokens {
 public:
  explicit BvhTokens(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      std::istringstream ls(line);
      std::string tok;
      while (ls >> tok) tokens_.push_back({tok, line_no});
    }
  }

  bool done() const { return pos_ >= tokens_.size(); }
  int line() const { return done() ? (tokens_.empty() ? 0 : tokens_.back().line) : tokens_[pos_].line; }

  const std::string& peek() const {
    if (done()) throw ParseError("bvh: unexpected end of file");
    return tokens_[pos_].text;
  }

  std::string next() {
    const std::string& t = peek();
    ++pos_;
    return t;
  }

  void expect(const std::string& want) {
    const int at = line();
    const std::string got = next();
    if (got != want) throw ParseError("bvh line " + std::to_string(at) + ": expected '" + want + "', found '" + got + "'");
  }

  double number() {
    const int at = line();
    const std::string t = next();
    try {
      std::size_t used = 0;
      const double v = std::stod(t, &used);
      if (used != t.size()) throw std::invalid_argument(t);
      return v;
    } catch (const std::exception&) {
      throw ParseError("bvh line " + std::to_string(at) + ": expected a number, found '" + t + "'");
    }
  }

 private:
  struct Token {
    std::string text;
    int line;
  };
  std::vector<Token> tokens_;
  std::size_t pos_ = 0;
};

Channel parse_channel(const std::string& name, const std::string& joint) {
  if (name == "Xposition") return Channel::x_pos;
  if (name == "Yposition") return Channel::y_pos;
  if (name == "Zposition") return Channel::z_pos;
  if (name == "Xrotation") return Channel::x_rot;
  if (name == "Yrotation") return Channel::y_rot;
  if (name == "Zrotation") return Channel::z_rot;
  throw UnsupportedFeature("bvh: joint '" + joint + "' uses unsupported channel '" + name + "'");
}

bool is_rotation(Channel c) { return c == Channel::x_rot || c == Channel::y_rot || c == Channel::z_rot; }

void check_channel_layout(const BvhJoint& joint) {
  int rotations = 0, positions = 0;
  std::set<Channel> seen;
  for (Channel c : joint.channels) {
    if (!seen.insert(c).second) throw UnsupportedFeature("bvh: joint '" + joint.name + "' repeats a channel");
    (is_rotation(c) ? rotations : positions)++;
  }
  if (rotations != 3) {
    throw UnsupportedFeature("bvh: joint '" + joint.name + "' must carry exactly three rotation channels");
  }
  if (positions != 0 && (joint.parent >= 0 || positions != 3)) {
    throw UnsupportedFeature("bvh: joint '" + joint.name +
                             "' has position channels; only the root may carry all three");
  }
}

void parse_joint(BvhTokens& tok, std::vector<BvhJoint>& joints, int parent) {
  BvhJoint joint;
  joint.name = tok.next();
  joint.parent = parent;
  tok.expect("{");
  tok.expect("OFFSET");
  joint.offset = Vec3<double>(tok.number(), tok.number(), tok.number());
  tok.expect("CHANNELS");
  const int line = tok.line();
  const double count = tok.number();
  if (count < 0 || count != std::floor(count)) {
    throw ParseError("bvh line " + std::to_string(line) + ": bad channel count");
  }
  for (int c = 0; c < static_cast<int>(count); ++c) joint.channels.push_back(parse_channel(tok.next(), joint.name));
  check_channel_layout(joint);
  const int index = static_cast<int>(joints.size());
  joints.push_back(joint);
  while (tok.peek() != "}") {
    const std::string kw = tok.next();
    if (kw == "JOINT") {
      parse_joint(tok, joints, index);
    } else if (kw == "End") {
      tok.expect("Site");
      tok.expect("{");
      tok.expect("OFFSET");
      tok.number();
      tok.number();
      tok.number();
      tok.expect("}");
    } else {
      throw ParseError("bvh line " + std::to_string(tok.line()) + ": unexpected '" + kw + "' in joint '" +
                       joint.name + "'");
    }
  }
  tok.expect("}");
}

Quat axis_rotation(Channel c, double degrees) {
  const double rad = degrees * std::numbers::pi / 180.0;
  const Vec3<double> axis = c == Channel::x_rot   ? Vec3<double>::UnitX()
                            : c == Channel::y_rot ? Vec3<double>::UnitY()
                                                  : Vec3<double>::UnitZ();
  return Quat::from_axis_angle(axis, rad);
}

// Angles (degrees) for R = Rz(a) Rx(b) Ry(c).
Vec3<double> zxy_euler(const Quat& q) {
  const Mat3<double> r = q.rotation_matrix();
  const double sb = std::clamp(r(2, 1), -1.0, 1.0);
  double a, b = std::asin(sb), c;
  if (std::abs(sb) < 1.0 - 1e-12) {
    a = std::atan2(-r(0, 1), r(1, 1));
    c = std::atan2(-r(2, 0), r(2, 2));
  } else {
    a = std::atan2(r(1, 0), r(0, 0));
    c = 0.0;
  }
  return Vec3<double>(a, b, c) * 180.0 / std::numbers::pi;
}

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::string topology_signature(const SkeletonTopology& topology) {
  std::string sig = "J" + std::to_string(topology.joint_count()) + ":";
  for (std::size_t j = 0; j < topology.parents.size(); ++j) {
    if (j > 0) sig += ",";
    sig += std::to_string(topology.parents[j]);
  }
  return sig;
}

LoadedClip parse_clip(const std::string& text, const std::string& origin) {
  const json doc = parse_json(text, origin);
  check_format(doc, kClipFormat, origin);
  LoadedClip out;
  out.topology = topology_from_json(doc, origin);
  out.clip.name = as_string(require(doc, "name", origin), origin + ": name");
  out.clip.fps = as_number(require(doc, "fps", origin), origin + ": fps");
  if (!(out.clip.fps > 0.0)) throw SchemaError(origin + ": fps must be positive");
  out.clip.topology_ref = topology_signature(out.topology);

  const json& frames = require(doc, "frames", origin);
  if (!frames.is_array() || frames.empty()) throw SchemaError(origin + ": frames must be a nonempty array");
  const std::size_t count = out.topology.joint_count();
  for (std::size_t f = 0; f < frames.size(); ++f) {
    const std::string where = origin + ": frame " + std::to_string(f);
    Pose pose;
    pose.root_translation = as_vector<3>(require(frames[f], "root_translation", where), where + " root_translation");
    const json& rots = require(frames[f], "rotations", where);
    if (!rots.is_array() || rots.size() != count) {
      throw SchemaError(where + ": expected " + std::to_string(count) + " rotations");
    }
    for (std::size_t j = 0; j < count; ++j) {
      const Vec4<double> raw = as_vector<4>(rots[j], where + " rotation " + std::to_string(j));
      const double norm = raw.norm();
      if (!(norm > 0.0) || !std::isfinite(norm)) {
        throw SchemaError(where + " rotation " + std::to_string(j) + ": zero or non-finite quaternion");
      }
      if (std::abs(norm - 1.0) > kNormWarning) {
        out.warnings.push_back(where + " rotation " + std::to_string(j) + ": quaternion norm " + fmt17(norm) +
                               " renormalized");
      }
      pose.rotations.emplace_back(raw);
    }
    out.clip.frames.push_back(std::move(pose));
  }
  return out;
}

std::string serialize_clip(const MotionClip& clip, const SkeletonTopology& topology) {
  if (clip.joint_count() != topology.joint_count()) {
    throw DimensionMismatch("serialize_clip: clip and topology differ in joint count");
  }
  json doc = {{"format", kClipFormat}, {"name", clip.name}, {"fps", clip.fps}};
  doc.update(topology_to_json(topology));
  json frames = json::array();
  for (const auto& f : clip.frames) {
    json rots = json::array();
    for (const auto& q : f.rotations) rots.push_back({q.w(), q.x(), q.y(), q.z()});
    frames.push_back({{"root_translation", {f.root_translation.x(), f.root_translation.y(), f.root_translation.z()}},
                      {"rotations", rots}});
  }
  doc["frames"] = frames;
  return doc.dump(1) + "\n";
}

std::string read_text_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw Error("failed writing '" + path.string() + "'");
}

LoadedClip read_clip(const fs::path& path) { return parse_clip(read_text_file(path), path.string()); }

void write_clip(const fs::path& path, const MotionClip& clip, const SkeletonTopology& topology) {
  write_text_file(path, serialize_clip(clip, topology));
}

SkeletonTopology read_topology(const fs::path& path) {
  if (path.extension() == ".bvh") return read_bvh_subset(path).topology;
  const json doc = parse_json(read_text_file(path), path.string());
  return topology_from_json(doc, path.string());
}

LoadedClip parse_bvh(const std::string& text, const std::string& name) {
  BvhTokens tok(text);
  tok.expect("HIERARCHY");
  tok.expect("ROOT");
  std::vector<BvhJoint> joints;
  parse_joint(tok, joints, -1);
  tok.expect("MOTION");
  tok.expect("Frames:");
  const double frame_count = tok.number();
  tok.expect("Frame");
  tok.expect("Time:");
  const double frame_time = tok.number();
  if (frame_count < 1 || frame_count != std::floor(frame_count)) throw SchemaError("bvh: frame count must be positive");
  if (!(frame_time > 0.0)) throw SchemaError("bvh: frame time must be positive");

  LoadedClip out;
  for (const auto& j : joints) {
    out.topology.joint_names.push_back(j.name);
    out.topology.parents.push_back(j.parent);
    out.topology.local_offsets.push_back(j.offset);
  }
  out.topology.validate();
  out.clip.name = name;
  out.clip.fps = 1.0 / frame_time;
  out.clip.topology_ref = topology_signature(out.topology);

  for (int f = 0; f < static_cast<int>(frame_count); ++f) {
    Pose pose;
    for (const auto& j : joints) {
      Quat q;
      for (Channel c : j.channels) {
        const double value = tok.number();
        switch (c) {
          case Channel::x_pos: pose.root_translation.x() = value; break;
          case Channel::y_pos: pose.root_translation.y() = value; break;
          case Channel::z_pos: pose.root_translation.z() = value; break;
          default: q = q * axis_rotation(c, value); break;
        }
      }
      pose.rotations.push_back(q);
    }
    out.clip.frames.push_back(std::move(pose));
  }
  if (!tok.done()) throw ParseError("bvh line " + std::to_string(tok.line()) + ": trailing data after frames");
  return out;
}

LoadedClip read_bvh_subset(const fs::path& path) {
  try {
    return parse_bvh(read_text_file(path), path.stem().string());
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

std::string serialize_bvh(const MotionClip& clip, const SkeletonTopology& topology) {
  topology.validate();
  if (clip.joint_count() != topology.joint_count()) {
    throw DimensionMismatch("serialize_bvh: clip and topology differ in joint count");
  }
  const auto kids = topology.children();
  std::ostringstream os;
  os << "HIERARCHY\n";
  auto emit = [&](auto&& self, int j, int depth) -> void {
    const std::string pad(static_cast<std::size_t>(depth) * 2, ' ');
    const auto& o = topology.local_offsets[j];
    const std::string name = j < static_cast<int>(topology.joint_names.size()) ? topology.joint_names[j]
                                                                                 : "joint" + std::to_string(j);
    os << pad << (topology.parents[j] < 0 ? "ROOT " : "JOINT ") << name << "\n" << pad << "{\n";
    os << pad << "  OFFSET " << fmt17(o.x()) << " " << fmt17(o.y()) << " " << fmt17(o.z()) << "\n";
    if (topology.parents[j] < 0) {
      os << pad << "  CHANNELS 6 Xposition Yposition Zposition Zrotation Xrotation Yrotation\n";
    } else {
      os << pad << "  CHANNELS 3 Zrotation Xrotation Yrotation\n";
    }
    for (int c : kids[j]) self(self, c, depth + 1);
    os << pad << "}\n";
  };
  emit(emit, 0, 0);
  os << "MOTION\nFrames: " << clip.size() << "\nFrame Time: " << fmt17(1.0 / clip.fps) << "\n";
  for (const auto& f : clip.frames) {
    // Joints must appear in hierarchy (depth-first) order.
    std::vector<std::string> values;
    auto visit = [&](auto&& self, int j) -> void {
      if (topology.parents[j] < 0) {
        for (int k = 0; k < 3; ++k) values.push_back(fmt17(f.root_translation[k]));
      }
      const Vec3<double> e = zxy_euler(f.rotations[j]);
      for (int k = 0; k < 3; ++k) values.push_back(fmt17(e[k]));
      for (int c : kids[j]) self(self, c);
    };
    visit(visit, 0);
    for (std::size_t k = 0; k < values.size(); ++k) os << (k ? " " : "") << values[k];
    os << "\n";
  }
  return os.str();
}

void write_bvh(const fs::path& path, const MotionClip& clip, const SkeletonTopology& topology) {
  write_text_file(path, serialize_bvh(clip, topology));
}

LoadedClip read_any_clip(const fs::path& path) {
  return path.extension() == ".bvh" ? read_bvh_subset(path) : read_clip(path);
}

std::string serialize_plan(const AlignmentResult& result) {
  const auto& m = result.plan.matrix;
  json data = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) data.push_back(m(i, j));
  json doc = {{"format", kPlanFormat},
              {"rows", m.rows()},
              {"cols", m.cols()},
              {"data", data},
              {"distance", result.distance},
              {"objective", result.objective},
              {"iterations_used", result.iterations_used},
              {"marginal_error", result.marginal_error}};
  return doc.dump(1) + "\n";
}

TransportPlan parse_plan(const std::string& text) {
  const json doc = parse_json(text, "plan");
  check_format(doc, kPlanFormat, "plan");
  const auto rows = as_integer(require(doc, "rows", "plan"), "plan rows");
  const auto cols = as_integer(require(doc, "cols", "plan"), "plan cols");
  const json& data = require(doc, "data", "plan");
  if (rows < 1 || cols < 1) throw SchemaError("plan: rows and cols must be positive");
  if (!data.is_array() || data.size() != static_cast<std::size_t>(rows * cols)) {
    throw SchemaError("plan: data must hold rows*cols entries");
  }
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j)
      m(i, j) = as_number(data[static_cast<std::size_t>(i * cols + j)], "plan entry " + std::to_string(i * cols + j));
  return TransportPlan::uniform_marginals(std::move(m));
}

void write_plan(const fs::path& path, const AlignmentResult& result) { write_text_file(path, serialize_plan(result)); }

TransportPlan read_plan(const fs::path& path) { return parse_plan(read_text_file(path)); }

std::string serialize_assignment(const AssignmentMatrix& assignment, double score) {
  json pairs = json::array();
  for (const auto& p : assignment.pairs) pairs.push_back({p.source, p.target});
  json matrix = json::array();
  for (Eigen::Index i = 0; i < assignment.matrix.rows(); ++i)
    for (Eigen::Index j = 0; j < assignment.matrix.cols(); ++j) matrix.push_back(assignment.matrix(i, j));
  json doc = {{"format", kAssignmentFormat},
              {"rows", assignment.matrix.rows()},
              {"cols", assignment.matrix.cols()},
              {"pairs", pairs},
              {"matrix", matrix},
              {"score", score}};
  return doc.dump(1) + "\n";
}

AssignmentMatrix parse_assignment(const std::string& text) {
  const json doc = parse_json(text, "assignment");
  check_format(doc, kAssignmentFormat, "assignment");
  const auto rows = as_integer(require(doc, "rows", "assignment"), "assignment rows");
  const auto cols = as_integer(require(doc, "cols", "assignment"), "assignment cols");
  const json& pairs = require(doc, "pairs", "assignment");
  if (rows < 1 || cols < 1 || !pairs.is_array() || pairs.size() != static_cast<std::size_t>(cols)) {
    throw SchemaError("assignment: expected one pair per column");
  }
  AssignmentMatrix out;
  out.matrix = Eigen::MatrixXi::Zero(rows, cols);
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    const std::string where = "assignment pair " + std::to_string(k);
    if (!pairs[k].is_array() || pairs[k].size() != 2) throw SchemaError(where + ": expected [source, target]");
    const auto s = as_integer(pairs[k][0], where);
    const auto t = as_integer(pairs[k][1], where);
    if (s < 0 || s >= rows || t != static_cast<long long>(k)) throw SchemaError(where + ": index out of range or unsorted");
    out.matrix(s, t) = 1;
    out.pairs.push_back({s, t});
  }
  return out;
}

void write_assignment(const fs::path& path, const AssignmentMatrix& assignment, double score) {
  write_text_file(path, serialize_assignment(assignment, score));
}

RunConfig parse_run_config(const std::string& text, const fs::path& base_dir) {
  const json doc = parse_json(text, "config");
  if (!doc.is_object()) throw SchemaError("config: document must be an object");
  reject_unknown(doc,
                 {"reference_dir", "target", "topology", "output_dir", "q_nearest", "samples_per_clip",
                  "tau_schedule", "opw", "metric", "optimizer", "rho", "lambda_capsule", "seed", "workers"},
                 "config");
  auto resolve = [&](const json& v, const char* key) {
    fs::path p = as_string(v, std::string("config.") + key);
    return p.is_absolute() ? p : base_dir / p;
  };

  RunConfig rc;
  rc.reference_dir = resolve(require(doc, "reference_dir", "config"), "reference_dir");
  rc.target = resolve(require(doc, "target", "config"), "target");
  rc.output_dir = resolve(require(doc, "output_dir", "config"), "output_dir");
  if (doc.contains("topology") && !doc["topology"].is_null()) rc.topology = resolve(doc["topology"], "topology");

  GenerationConfig& g = rc.generation;
  if (doc.contains("q_nearest")) g.q_nearest = static_cast<int>(as_integer(doc["q_nearest"], "config.q_nearest"));
  if (doc.contains("samples_per_clip")) {
    g.samples_per_clip = static_cast<int>(as_integer(doc["samples_per_clip"], "config.samples_per_clip"));
  }
  if (doc.contains("tau_schedule")) {
    const json& taus = doc["tau_schedule"];
    if (!taus.is_array()) throw SchemaError("config.tau_schedule: expected an array");
    g.tau_schedule.clear();
    for (const auto& t : taus) g.tau_schedule.push_back(as_number(t, "config.tau_schedule"));
  } else {
    g.tau_schedule = GenerationConfig::default_tau_schedule(std::max(0, g.samples_per_clip));
  }
  if (doc.contains("opw")) g.opw = opw_from_json(doc["opw"], g.opw);
  if (doc.contains("metric")) {
    reject_unknown(doc["metric"], {"w"}, "config.metric");
    if (doc["metric"].contains("w")) g.metric.w = as_number(doc["metric"]["w"], "config.metric.w");
  }
  if (doc.contains("optimizer")) g.optimizer = optimizer_from_json(doc["optimizer"], g.optimizer);
  if (doc.contains("rho")) g.rho = as_number(doc["rho"], "config.rho");
  if (doc.contains("lambda_capsule")) g.lambda_capsule = as_number(doc["lambda_capsule"], "config.lambda_capsule");
  if (doc.contains("seed")) g.seed = static_cast<std::uint64_t>(as_integer(doc["seed"], "config.seed"));
  if (doc.contains("workers")) g.workers = static_cast<int>(as_integer(doc["workers"], "config.workers"));
  try {
    g.validate();
  } catch (const std::invalid_argument& e) {
    throw SchemaError(e.what());
  }
  return rc;
}

RunConfig read_run_config(const fs::path& path) {
  RunConfig rc = parse_run_config(read_text_file(path), path.parent_path());
  if (!fs::is_directory(rc.reference_dir)) {
    throw SchemaError("config: reference_dir '" + rc.reference_dir.string() + "' is not a directory");
  }
  if (!fs::is_regular_file(rc.target)) throw SchemaError("config: target '" + rc.target.string() + "' does not exist");
  if (rc.topology && !fs::is_regular_file(*rc.topology)) {
    throw SchemaError("config: topology '" + rc.topology->string() + "' does not exist");
  }
  return rc;
}

std::string serialize_generation_config(const GenerationConfig& cfg) { return generation_to_json(cfg).dump(1); }

std::string serialize_manifest(const GeneratedSet& set, const GenerationConfig& cfg, const std::string& target_name) {
  json clips = json::array();
  for (std::size_t k = 0; k < set.clips.size(); ++k) {
    const auto& prov = set.provenance[k];
    json pairs = json::array();
    for (const auto& p : prov.pairs) pairs.push_back({p.source, p.target});
    json frames = json::array();
    for (const auto& f : prov.frames) {
      frames.push_back({{"initial_energy", f.initial_energy},
                        {"final_energy", f.final_energy},
                        {"steps", f.steps_taken},
                        {"flagged", f.flagged}});
    }
    clips.push_back({{"name", set.clips[k].name},
                     {"file", set.clips[k].name + ".json"},
                     {"source_clip", prov.source_clip},
                     {"tau", prov.tau},
                     {"opw_distance", prov.opw_distance},
                     {"flagged", prov.flagged()},
                     {"pairs", pairs},
                     {"frames", frames}});
  }
  json doc = {{"format", kManifestFormat},
              {"version", kVersion},
              {"target", target_name},
              {"config", generation_to_json(cfg)},
              {"clip_count", set.clips.size()},
              {"flagged_frames", set.flagged_frame_count()},
              {"clips", clips}};
  return doc.dump(1) + "\n";
}

}  // namespace motionbridge
