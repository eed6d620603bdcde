#pragma once

// Riemannian gradient descent over joint rotations to remove self-collisions.

#include <array>
#include <string>
#include <vector>

#include "motionbridge/collision.hpp"

namespace motionbridge {

enum class GradientMode { analytic, finite_difference };

struct OptimizerConfig {
  double learning_rate = 0.05;
  int max_steps = 120;
  double energy_stop = 1e-6;
  GradientMode gradient_mode = GradientMode::finite_difference;
  double fd_step = 1e-6;
  bool backtracking = false;  // halve the step until the energy drops

  void validate() const;
};

struct OptimizationTrace {
  double initial_energy = 0.0;
  double final_energy = 0.0;
  int steps_taken = 0;
  std::vector<double> energy_history;
  bool converged_early = false;
  double max_norm_error = 0.0;  // worst | |q| - 1 | seen over all iterates
};

class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, OptimizationTrace trace) : Error(what), trace_(std::move(trace)) {}
  const OptimizationTrace& trace() const { return trace_; }

 private:
  OptimizationTrace trace_;
};

/// Derivative of (w, x, y, z) -> (dw, dx, dy, dz) of the rotation matrix.
std::array<Mat3<double>, 4> rotation_matrix_derivatives(const Vec4<double>& q);

/// dE/dq_j for every joint, taken in the tangent space of the unit sphere
/// (the energy depends on each quaternion only through its rotation).
std::vector<Vec4<double>> energy_gradient(const Pose& pose, const CollisionModel& model, GradientMode mode,
                                          double fd_step = 1e-6);

struct OptimizationResult {
  Pose pose;
  OptimizationTrace trace;
};

/// Fixed-step descent: energy, early stop, gradient, tangent projection,
/// step, renormalize. The root translation is left untouched.
OptimizationResult optimize_pose(const Pose& pose, const CollisionModel& model, const OptimizerConfig& cfg = {});

}  // namespace motionbridge
