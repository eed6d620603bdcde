#include "motionbridge/opw.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

namespace motionbridge {

namespace {

constexpr double kMaxExponent = 700.0;
constexpr double kKernelFloor = 1e-300;

bool all_finite(const Eigen::Ref<const Matrix>& m) { return m.allFinite(); }

Matrix log_kernel(const Matrix& cost, const OpwParams& p) {
  const Eigen::Index n = cost.rows();
  const Eigen::Index m = cost.cols();
  Matrix log_prior = p.prior == PriorKind::gaussian
                         ? Matrix(gaussian_prior(n, m, p).array().log())
                         : Matrix::Constant(n, m, -std::log(static_cast<double>(n * m)));
  return log_prior.array() + (idm_matrix(n, m, p) - cost).array() / p.lambda2;
}

double log_sum_exp(const Eigen::Ref<const Vector>& x) {
  const double mx = x.maxCoeff();
  if (!std::isfinite(mx)) return mx;
  return mx + std::log((x.array() - mx).exp().sum());
}

struct Scalings {
  Matrix plan;
  int iterations = 0;
};

Scalings sinkhorn_standard(const Matrix& log_k, const OpwParams& p) {
  const Eigen::Index n = log_k.rows();
  const Eigen::Index m = log_k.cols();
  // A global shift leaves the plan unchanged and keeps the largest entry at 1.
  const double shift = log_k.maxCoeff();
  const Matrix kernel = (log_k.array() - shift).min(kMaxExponent).exp().max(kKernelFloor).matrix();
  if (!all_finite(kernel)) {
    throw NumericOverflow("opw: kernel is not finite; increase lambda2 or use log-domain mode");
  }
  const Vector alpha = Vector::Constant(n, 1.0 / static_cast<double>(n));
  const Vector beta = Vector::Constant(m, 1.0 / static_cast<double>(m));
  Vector u = Vector::Ones(n);
  Vector v = Vector::Ones(m);

  Scalings out;
  for (int it = 0; it < p.max_iters; ++it) {
    if (p.relaxation == 1.0) {
      u = alpha.cwiseQuotient(kernel * v);
      v = beta.cwiseQuotient(kernel.transpose() * u);
    } else {
      const double w = p.relaxation;
      u = (u.array().log() * (1.0 - w) + alpha.cwiseQuotient(kernel * v).array().log() * w).exp().matrix();
      v = (v.array().log() * (1.0 - w) + beta.cwiseQuotient(kernel.transpose() * u).array().log() * w).exp().matrix();
    }
    if (!u.allFinite() || !v.allFinite()) {
      throw NumericOverflow("opw: Sinkhorn scalings overflowed after " + std::to_string(it + 1) +
                            " iterations; increase lambda2 or use log-domain mode");
    }
    out.iterations = it + 1;
    if (p.tolerance > 0.0) {
      const Matrix plan = u.asDiagonal() * kernel * v.asDiagonal();
      if (marginal_violation(plan) < p.tolerance) break;
    }
  }
  out.plan = u.asDiagonal() * kernel * v.asDiagonal();
  return out;
}

Scalings sinkhorn_log(const Matrix& log_k, const OpwParams& p) {
  const Eigen::Index n = log_k.rows();
  const Eigen::Index m = log_k.cols();
  if (!all_finite(log_k)) {
    throw NumericOverflow("opw: log kernel is not finite");
  }
  const double log_alpha = -std::log(static_cast<double>(n));
  const double log_beta = -std::log(static_cast<double>(m));
  Vector f = Vector::Zero(n);
  Vector g = Vector::Zero(m);

  auto assemble = [&] {
    Matrix plan(n, m);
    for (Eigen::Index j = 0; j < m; ++j)
      for (Eigen::Index i = 0; i < n; ++i) plan(i, j) = std::exp(f[i] + log_k(i, j) + g[j]);
    return plan;
  };

  Scalings out;
  for (int it = 0; it < p.max_iters; ++it) {
    const double w = p.relaxation;
    for (Eigen::Index i = 0; i < n; ++i)
      f[i] = (1.0 - w) * f[i] + w * (log_alpha - log_sum_exp(log_k.row(i).transpose() + g));
    for (Eigen::Index j = 0; j < m; ++j) g[j] = (1.0 - w) * g[j] + w * (log_beta - log_sum_exp(log_k.col(j) + f));
    out.iterations = it + 1;
    if (p.tolerance > 0.0 && marginal_violation(assemble()) < p.tolerance) break;
  }
  out.plan = assemble();
  return out;
}

// Log-domain sweeps to warm start, then damped Newton steps on the dual
// potentials. The last column potential is pinned to remove the (1, -1)
// null direction of the Hessian.
Scalings sinkhorn_newton(const Matrix& log_k, const OpwParams& p) {
  const Eigen::Index n = log_k.rows();
  const Eigen::Index m = log_k.cols();
  if (!all_finite(log_k)) throw NumericOverflow("opw: log kernel is not finite");
  const double log_alpha = -std::log(static_cast<double>(n));
  const double log_beta = -std::log(static_cast<double>(m));
  const Vector alpha = Vector::Constant(n, 1.0 / static_cast<double>(n));
  const Vector beta = Vector::Constant(m, 1.0 / static_cast<double>(m));
  Vector f = Vector::Zero(n);
  Vector g = Vector::Zero(m);

  auto plan_of = [&](const Vector& ff, const Vector& gg) {
    Matrix plan(n, m);
    for (Eigen::Index j = 0; j < m; ++j)
      for (Eigen::Index i = 0; i < n; ++i) plan(i, j) = std::exp(ff[i] + log_k(i, j) + gg[j]);
    return plan;
  };
  auto dual = [&](const Vector& ff, const Vector& gg) {
    return alpha.dot(ff) + beta.dot(gg) - plan_of(ff, gg).sum();
  };

  Scalings out;
  const int warm = std::min(p.max_iters, 10);
  for (int it = 0; it < warm; ++it) {
    for (Eigen::Index i = 0; i < n; ++i) f[i] = log_alpha - log_sum_exp(log_k.row(i).transpose() + g);
    for (Eigen::Index j = 0; j < m; ++j) g[j] = log_beta - log_sum_exp(log_k.col(j) + f);
    out.iterations = it + 1;
  }
  Matrix plan = plan_of(f, g);
  const Eigen::Index k = n + m - 1;
  while (out.iterations < p.max_iters) {
    if (p.tolerance > 0.0 && marginal_violation(plan) < p.tolerance) break;
    const Vector rows = plan.rowwise().sum();
    const Vector cols = plan.colwise().sum().transpose();
    Matrix hess = Matrix::Zero(k, k);
    Vector grad(k);
    hess.topLeftCorner(n, n).diagonal() = rows;
    hess.topRightCorner(n, m - 1) = plan.leftCols(m - 1);
    hess.bottomLeftCorner(m - 1, n) = plan.leftCols(m - 1).transpose();
    hess.bottomRightCorner(m - 1, m - 1).diagonal() = cols.head(m - 1);
    grad.head(n) = alpha - rows;
    grad.tail(m - 1) = beta.head(m - 1) - cols.head(m - 1);
    const Vector step = hess.ldlt().solve(grad);
    if (!step.allFinite()) break;

    const double base = dual(f, g);
    const double slope = grad.dot(step);
    double t = 1.0;
    Vector nf, ng;
    for (int tries = 0; tries < 60; ++tries, t *= 0.5) {
      nf = f + t * step.head(n);
      ng = g;
      ng.head(m - 1) += t * step.tail(m - 1);
      const double value = dual(nf, ng);
      if (std::isfinite(value) && value >= base + 1e-4 * t * slope) break;
    }
    Matrix next = plan_of(nf, ng);
    if (!(dual(nf, ng) > base)) {
      // The dual gain is below rounding here; judge the full step by the marginals instead.
      nf = f + step.head(n);
      ng = g;
      ng.head(m - 1) += step.tail(m - 1);
      next = plan_of(nf, ng);
      if (!(marginal_violation(next) < marginal_violation(plan))) break;
    }
    f = nf;
    g = ng;
    plan = std::move(next);
    ++out.iterations;
  }
  out.plan = std::move(plan);
  return out;
}

}  // namespace

void OpwParams::validate() const {
  if (!(lambda1 > 0.0)) throw std::invalid_argument("opw: lambda1 must be positive");
  if (!(lambda2 > 0.0)) throw std::invalid_argument("opw: lambda2 must be positive");
  if (!(delta > 0.0)) throw std::invalid_argument("opw: delta must be positive");
  if (max_iters < 1) throw std::invalid_argument("opw: max_iters must be at least 1");
  if (!(tolerance >= 0.0)) throw std::invalid_argument("opw: tolerance must be nonnegative");
  if (!(relaxation >= 1.0 && relaxation < 2.0)) throw std::invalid_argument("opw: relaxation must lie in [1, 2)");
}

TransportPlan TransportPlan::uniform_marginals(Matrix m) {
  TransportPlan plan;
  plan.row_marginal = Vector::Constant(m.rows(), 1.0 / static_cast<double>(m.rows()));
  plan.col_marginal = Vector::Constant(m.cols(), 1.0 / static_cast<double>(m.cols()));
  plan.matrix = std::move(m);
  return plan;
}

Matrix cost_matrix(const MotionClip& source, const MotionClip& target, const MetricConfig& cfg) {
  if (source.joint_count() != target.joint_count()) {
    throw DimensionMismatch("cost_matrix: clips '" + source.name + "' and '" + target.name +
                            "' have different joint counts");
  }
  const auto n = static_cast<Eigen::Index>(source.size());
  const auto m = static_cast<Eigen::Index>(target.size());
  Matrix d(n, m);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < m; ++j) d(i, j) = pose_distance(source.frames[i], target.frames[j], cfg);
  return d;
}

Matrix idm_matrix(Eigen::Index n_rows, Eigen::Index n_cols, const OpwParams& p) {
  Matrix h(n_rows, n_cols);
  for (Eigen::Index j = 0; j < n_cols; ++j) {
    for (Eigen::Index i = 0; i < n_rows; ++i) {
      const double diff = static_cast<double>(i + 1) / n_rows - static_cast<double>(j + 1) / n_cols;
      h(i, j) = p.lambda1 / (diff * diff + 1.0);
    }
  }
  return h;
}

Matrix gaussian_prior(Eigen::Index n_rows, Eigen::Index n_cols, const OpwParams& p) {
  const double peak = 1.0 / (p.delta * std::sqrt(2.0 * std::numbers::pi));
  const double scale = std::sqrt(1.0 / double(n_rows * n_rows) + 1.0 / double(n_cols * n_cols));
  Matrix prior(n_rows, n_cols);
  for (Eigen::Index j = 0; j < n_cols; ++j) {
    for (Eigen::Index i = 0; i < n_rows; ++i) {
      const double d =
          std::abs(static_cast<double>(i + 1) / n_rows - static_cast<double>(j + 1) / n_cols) / scale;
      prior(i, j) = peak * std::exp(-d * d / (2.0 * p.delta * p.delta));
    }
  }
  return prior;
}

double marginal_violation(const Matrix& plan) {
  const double n = static_cast<double>(plan.rows());
  const double m = static_cast<double>(plan.cols());
  return (plan.rowwise().sum().array() - 1.0 / n).abs().sum() +
         (plan.colwise().sum().array() - 1.0 / m).abs().sum();
}

AlignmentResult opw_solve(const Matrix& cost, const OpwParams& p) {
  p.validate();
  if (cost.size() == 0) throw EmptyInput("opw: empty cost matrix");
  if (!cost.allFinite()) throw NumericOverflow("opw: cost matrix has non-finite entries");

  const Matrix log_k = log_kernel(cost, p);
  Scalings s;
  if (p.mode == SinkhornMode::log_domain) {
    s = sinkhorn_log(log_k, p);
  } else if (p.mode == SinkhornMode::newton) {
    s = sinkhorn_newton(log_k, p);
  } else {
    // Scalings outside double range: redo the same iterations in the log domain.
    try {
      s = sinkhorn_standard(log_k, p);
    } catch (const NumericOverflow&) {
      s = sinkhorn_log(log_k, p);
    }
  }

  AlignmentResult result;
  result.distance = (s.plan.array() * cost.array()).sum();
  result.iterations_used = s.iterations;
  result.marginal_error = marginal_violation(s.plan);

  const Matrix h = idm_matrix(cost.rows(), cost.cols(), p);
  const Matrix prior = p.prior == PriorKind::gaussian
                           ? gaussian_prior(cost.rows(), cost.cols(), p)
                           : Matrix::Constant(cost.rows(), cost.cols(), 1.0 / double(cost.size()));
  double kl = 0.0;
  for (Eigen::Index j = 0; j < s.plan.cols(); ++j)
    for (Eigen::Index i = 0; i < s.plan.rows(); ++i)
      if (s.plan(i, j) > 0.0) kl += s.plan(i, j) * std::log(s.plan(i, j) / prior(i, j));
  result.objective = result.distance - (s.plan.array() * h.array()).sum() + p.lambda2 * kl;

  result.plan = TransportPlan::uniform_marginals(std::move(s.plan));
  return result;
}

AlignmentResult opw_align(const MotionClip& source, const MotionClip& target, const OpwParams& p,
                          const MetricConfig& cfg) {
  if (source.frames.empty() || target.frames.empty()) throw EmptyInput("opw_align: empty clip");
  return opw_solve(cost_matrix(source, target, cfg), p);
}

}  // namespace motionbridge
