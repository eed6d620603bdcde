#pragma once

// Order-preserving Wasserstein alignment of two pose sequences.

#include <Eigen/Dense>

#include "motionbridge/pose.hpp"

namespace motionbridge {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

enum class PriorKind {
  gaussian,  // positional Gaussian prior around the normalized-time diagonal
  uniform,   // flat prior; with a vanishing lambda1 this is plain entropic OT
};

enum class SinkhornMode {
  standard,    // plain scaling; falls back to log_domain if the scalings leave double range
  log_domain,  // scaling on log potentials
  newton,      // log-domain warm start, then damped Newton steps on the dual
};

struct OpwParams {
  double lambda1 = 50.0;   // inverse-difference-moment weight
  double lambda2 = 0.1;    // KL weight toward the prior
  double delta = 1.0;      // prior standard deviation
  int max_iters = 20;
  double tolerance = 0.0;  // L1 marginal violation; 0 runs exactly max_iters
  double relaxation = 1.0; // over-relaxed scaling updates for omega in (1, 2); 1 is plain Sinkhorn
  PriorKind prior = PriorKind::gaussian;
  SinkhornMode mode = SinkhornMode::standard;

  void validate() const;
};

/// Soft coupling between N source and M target frames.
struct TransportPlan {
  Matrix matrix;
  Vector row_marginal;
  Vector col_marginal;

  Eigen::Index rows() const { return matrix.rows(); }
  Eigen::Index cols() const { return matrix.cols(); }

  /// Plan with uniform marginals 1/N, 1/M around an existing matrix.
  static TransportPlan uniform_marginals(Matrix m);
};

struct AlignmentResult {
  TransportPlan plan;
  double distance = 0.0;     // <plan, cost>
  double objective = 0.0;    // <plan, cost> - <plan, H> + lambda2 KL(plan || prior)
  int iterations_used = 0;
  double marginal_error = 0.0;  // L1 row + column violation
};

/// D(n, m) = pose_distance(S[n], T[m]).
Matrix cost_matrix(const MotionClip& source, const MotionClip& target, const MetricConfig& cfg = {});

/// H(n, m) = lambda1 / ((n/N - m/M)^2 + 1) with 1-based n, m.
Matrix idm_matrix(Eigen::Index n_rows, Eigen::Index n_cols, const OpwParams& p);

/// Scaled Gaussian over the normalized-time offset, 1-based indices.
Matrix gaussian_prior(Eigen::Index n_rows, Eigen::Index n_cols, const OpwParams& p);

/// Solves the regularized problem for an arbitrary nonnegative cost matrix.
AlignmentResult opw_solve(const Matrix& cost, const OpwParams& p);

AlignmentResult opw_align(const MotionClip& source, const MotionClip& target, const OpwParams& p = {},
                          const MetricConfig& cfg = {});

/// L1 deviation of the plan's row and column sums from uniform marginals.
double marginal_violation(const Matrix& plan);

}  // namespace motionbridge
