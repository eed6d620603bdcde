#include "motionbridge/optimizer.hpp"

#include <cmath>

namespace motionbridge {

namespace {

double max_norm_error(const Pose& pose) {
  double worst = 0.0;
  for (const auto& q : pose.rotations) worst = std::max(worst, std::abs(q.coeffs().norm() - 1.0));
  return worst;
}

std::vector<Vec4<double>> analytic_gradient(const Pose& pose, const CollisionModel& model) {
  const auto& topo = model.topology;
  const std::size_t count = topo.joint_count();
  const Positions<double> x = forward_kinematics(model.topology, pose);
  Positions<double> gx;
  energy_with_position_gradient(x, model, gx);

  std::vector<Mat3<double>> world(count);
  for (std::size_t j = 0; j < count; ++j) {
    const Mat3<double> local = pose.rotations[j].rotation_matrix();
    const int p = topo.parents[j];
    world[j] = p < 0 ? local : Mat3<double>(world[p] * local);
  }

  // Subtree sums of g_k and g_k x_k^T, accumulated leaf to root.
  std::vector<Vec3<double>> g_sum(count);
  std::vector<Mat3<double>> gx_sum(count);
  for (std::size_t j = 0; j < count; ++j) {
    g_sum[j] = gx.row(j).transpose();
    gx_sum[j] = g_sum[j] * x.row(j);
  }
  for (std::size_t j = count; j-- > 0;) {
    const int p = topo.parents[j];
    if (p < 0) continue;
    g_sum[p] += g_sum[j];
    gx_sum[p] += gx_sum[j];
  }

  std::vector<Vec4<double>> grads(count);
  for (std::size_t j = 0; j < count; ++j) {
    // sum over descendants k of g_k (x_k - x_j)^T, moved into the joint's local frame
    const Mat3<double> lever = gx_sum[j] - g_sum[j] * x.row(j);
    const int p = topo.parents[j];
    const Mat3<double> frame = p < 0 ? Mat3<double>(lever * world[j]) : Mat3<double>(world[p].transpose() * lever * world[j]);
    const Vec4<double>& q = pose.rotations[j].coeffs();
    const auto dR = rotation_matrix_derivatives(q);
    Vec4<double> g;
    for (int i = 0; i < 4; ++i) g[i] = (dR[i].array() * frame.array()).sum();
    grads[j] = g - q.dot(g) * q;
  }
  return grads;
}

std::vector<Vec4<double>> finite_difference_gradient(const Pose& pose, const CollisionModel& model, double h) {
  std::vector<Vec4<double>> grads(pose.joint_count(), Vec4<double>::Zero());
  Pose probe = pose;
  for (std::size_t j = 0; j < pose.joint_count(); ++j) {
    const Vec4<double> base = pose.rotations[j].coeffs();
    for (int i = 0; i < 4; ++i) {
      Vec4<double> q = base;
      q[i] += h;
      probe.rotations[j] = Quat(q);
      const double up = total_energy(probe, model).total;
      q[i] = base[i] - h;
      probe.rotations[j] = Quat(q);
      const double down = total_energy(probe, model).total;
      grads[j][i] = (up - down) / (2.0 * h);
    }
    probe.rotations[j] = pose.rotations[j];
  }
  return grads;
}

}  // namespace

void OptimizerConfig::validate() const {
  if (!(learning_rate > 0.0)) throw std::invalid_argument("optimizer: learning_rate must be positive");
  if (max_steps < 1) throw std::invalid_argument("optimizer: max_steps must be at least 1");
  if (!(energy_stop >= 0.0)) throw std::invalid_argument("optimizer: energy_stop must be nonnegative");
  if (!(fd_step > 0.0)) throw std::invalid_argument("optimizer: fd_step must be positive");
}

std::array<Mat3<double>, 4> rotation_matrix_derivatives(const Vec4<double>& q) {
  const double w = q[0], x = q[1], y = q[2], z = q[3];
  std::array<Mat3<double>, 4> d;
  d[0] << 0, -z, y, z, 0, -x, -y, x, 0;
  d[1] << 0, y, z, y, -2 * x, -w, z, w, -2 * x;
  d[2] << -2 * y, x, w, x, 0, z, -w, z, -2 * y;
  d[3] << -2 * z, -w, x, w, -2 * z, y, x, y, 0;
  for (auto& m : d) m *= 2.0;
  return d;
}

std::vector<Vec4<double>> energy_gradient(const Pose& pose, const CollisionModel& model, GradientMode mode,
                                          double fd_step) {
  if (pose.joint_count() != model.topology.joint_count()) {
    throw DimensionMismatch("energy_gradient: pose and topology differ in joint count");
  }
  return mode == GradientMode::analytic ? analytic_gradient(pose, model)
                                        : finite_difference_gradient(pose, model, fd_step);
}

OptimizationResult optimize_pose(const Pose& pose, const CollisionModel& model, const OptimizerConfig& cfg) {
  cfg.validate();
  OptimizationResult result{pose, {}};
  OptimizationTrace& trace = result.trace;
  Pose& current = result.pose;
  trace.max_norm_error = max_norm_error(current);

  auto record = [&](double energy) {
    trace.energy_history.push_back(energy);
    if (!std::isfinite(energy)) {
      trace.final_energy = energy;
      throw DivergenceError("optimize_pose: energy became non-finite after " + std::to_string(trace.steps_taken) +
                                " steps",
                            trace);
    }
  };

  double energy = total_energy(current, model).total;
  trace.initial_energy = energy;
  record(energy);
  while (true) {
    if (energy < cfg.energy_stop) {
      trace.converged_early = true;
      break;
    }
    if (trace.steps_taken >= cfg.max_steps) break;

    const auto grads = energy_gradient(current, model, cfg.gradient_mode, cfg.fd_step);
    auto step_with = [&](double lr) {
      Pose next = current;
      for (std::size_t j = 0; j < grads.size(); ++j) {
        const Vec4<double>& q = current.rotations[j].coeffs();
        const Vec4<double> projected = grads[j] - q.dot(grads[j]) * q;
        next.rotations[j] = Quat(Vec4<double>(q - lr * projected));
      }
      return next;
    };

    Pose next = step_with(cfg.learning_rate);
    double next_energy = total_energy(next, model).total;
    if (cfg.backtracking) {
      double lr = cfg.learning_rate;
      for (int halving = 0; halving < 30 && !(next_energy < energy); ++halving) {
        lr *= 0.5;
        next = step_with(lr);
        next_energy = total_energy(next, model).total;
      }
    }
    current = std::move(next);
    energy = next_energy;
    ++trace.steps_taken;
    trace.max_norm_error = std::max(trace.max_norm_error, max_norm_error(current));
    record(energy);
  }
  trace.final_energy = energy;
  return result;
}

}  // namespace motionbridge
