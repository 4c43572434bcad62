#include "hfr/linalg.hpp"

#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

namespace hfr::linalg {

void CgParams::validate() const {
  if (max_iters < 1) throw ConfigError("CG max_iters must be >= 1");
  if (!(residual_tol > 0.0)) throw ConfigError("CG residual_tol must be > 0");
  if (!(damping >= 0.0)) throw ConfigError("CG damping must be >= 0");
}

CgResult cg_solve_spd(const LinearOperator& apply_a, const Vec& b, const CgParams& params) {
  params.validate();
  CgResult out;
  out.solution = Vec::Zero(b.size());
  const double b_norm = b.norm();
  if (!std::isfinite(b_norm)) throw NumericalError("numerical divergence");
  if (b_norm == 0.0) return out;

  Vec r = b;
  Vec p = r;
  double rs = r.squaredNorm();
  for (int k = 1; k <= params.max_iters; ++k) {
    Vec ap = apply_a(p);
    ++out.operator_applies;
    if (params.damping > 0.0) ap += params.damping * p;
    const double curvature = p.dot(ap);
    if (!std::isfinite(curvature)) throw NumericalError("numerical divergence");
    if (curvature <= 0.0) throw NumericalError("operator not positive definite");
    const double alpha = rs / curvature;
    out.solution += alpha * p;
    r -= alpha * ap;
    out.iters = k;
    const double rs_next = r.squaredNorm();
    if (!std::isfinite(rs_next) || !out.solution.allFinite())
      throw NumericalError("numerical divergence");
    if (std::sqrt(rs_next) <= params.residual_tol * b_norm) {
      rs = rs_next;
      break;
    }
    p = r + (rs_next / rs) * p;
    rs = rs_next;
  }
  out.residual = std::sqrt(rs);
  return out;
}

CgResult cg_solve_squared(const LinearOperator& apply_h, const Vec& r, const CgParams& params) {
  params.validate();
  const double lambda = params.damping;
  CgResult out;
  out.solution = Vec::Zero(r.size());
  if (!r.allFinite()) throw NumericalError("numerical divergence");

  // s tracks r - H x; z = H s - lambda x is the residual of the squared system.
  Vec s = r;
  Vec z = apply_h(s);
  ++out.operator_applies;
  double gamma = z.squaredNorm();
  const double rhs_norm = std::sqrt(gamma);
  if (!std::isfinite(rhs_norm)) throw NumericalError("numerical divergence");
  if (rhs_norm == 0.0) return out;

  Vec p = z;
  for (int k = 1; k <= params.max_iters; ++k) {
    const Vec q = apply_h(p);
    ++out.operator_applies;
    const double curvature = q.squaredNorm() + lambda * p.squaredNorm();
    if (!std::isfinite(curvature)) throw NumericalError("numerical divergence");
    if (curvature <= 0.0) throw NumericalError("operator not positive definite");
    const double alpha = gamma / curvature;
    out.solution += alpha * p;
    s -= alpha * q;
    out.iters = k;
    if (!out.solution.allFinite()) throw NumericalError("numerical divergence");
    // Budget exhausted: the refreshed residual would only cost another product.
    if (k == params.max_iters) break;

    z = apply_h(s);
    ++out.operator_applies;
    if (lambda > 0.0) z -= lambda * out.solution;
    const double gamma_next = z.squaredNorm();
    if (!std::isfinite(gamma_next)) throw NumericalError("numerical divergence");
    if (std::sqrt(gamma_next) <= params.residual_tol * rhs_norm) {
      gamma = gamma_next;
      break;
    }
    p = z + (gamma_next / gamma) * p;
    gamma = gamma_next;
  }
  out.residual = std::sqrt(gamma);
  return out;
}

Vec hessianfr_rhs_cg(const MinimaxProblem& problem, const PointXY& point, double c2,
                     const CgParams& params) {
  const Vec gx = problem.grad_x(point);
  const Vec gy = problem.grad_y(point);
  const Vec r = c2 * gy - problem.hvp_yx(point, gx);
  const auto apply_h = [&](const Vec& v) { return problem.hvp_yy(point, v); };
  return cg_solve_squared(apply_h, r, params).solution;
}

double default_fd_alpha(const PointXY& point, const Vec& direction) {
  return 1e-6 * (1.0 + point.x.norm()) / (1.0 + direction.norm());
}

Vec fd_hvp_yx(const MinimaxProblem& problem, const PointXY& point, const Vec& direction,
              double alpha, const std::optional<Vec>& grad_y_at_point) {
  if (!(alpha > 0.0)) throw ConfigError("finite-difference step must be positive");
  if (direction.isZero(0.0)) return Vec::Zero(point.dim_y());
  const Vec g0 = grad_y_at_point ? *grad_y_at_point : problem.grad_y(point);
  PointXY shifted(point.x + alpha * direction, point.y);
  Vec out = (problem.grad_y(shifted) - g0) / alpha;
  if (!out.allFinite()) throw NumericalError("non-finite finite-difference probe");
  return out;
}

Vec fd_hvp_yx(const MinimaxProblem& problem, const PointXY& point, double alpha) {
  return fd_hvp_yx(problem, point, problem.grad_x(point), alpha);
}

DgState dg_update(DgState state, const Vec& grad_y_now, const Vec& y_now) {
  if (state.prev_grad_y && state.prev_y) {
    const Vec dg = grad_y_now - *state.prev_grad_y;
    const Vec dy = y_now - *state.prev_y;
    const double denom = dg.squaredNorm();
    if (denom >= 1e-24) {
      const double scale = dg.dot(dy) / denom;
      if (std::isfinite(scale)) state.scale = scale;
    }
  } else {
    state.scale = 1.0;
  }
  state.prev_grad_y = grad_y_now;
  state.prev_y = y_now;
  return state;
}

namespace {

void RequireSquare(const Mat& a) {
  if (a.rows() != a.cols()) throw ConfigError("matrix must be square");
}

void RequireSymmetric(const Mat& a) {
  RequireSquare(a);
  if (a.size() == 0) return;
  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  if ((a - a.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale)
    throw ConfigError("matrix is not symmetric");
}

}  // namespace

SymEigen eig_sym(const Mat& a) {
  RequireSymmetric(a);
  Eigen::SelfAdjointEigenSolver<Mat> solver(a);
  if (solver.info() != Eigen::Success) throw NumericalError("symmetric eigensolver failed");
  return {solver.eigenvalues(), solver.eigenvectors()};
}

Vec eigvals_sym(const Mat& a) {
  RequireSymmetric(a);
  Eigen::SelfAdjointEigenSolver<Mat> solver(a, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw NumericalError("symmetric eigensolver failed");
  return solver.eigenvalues();
}

double spectral_radius(const Mat& a) {
  RequireSquare(a);
  if (a.size() == 0) return 0.0;
  if (!a.allFinite()) throw NumericalError("spectrum not resolved");
  Eigen::EigenSolver<Mat> solver(a, /*computeEigenvectors=*/false);
  if (solver.info() != Eigen::Success) throw NumericalError("spectrum not resolved");
  return solver.eigenvalues().cwiseAbs().maxCoeff();
}

HessianBlocks fd_hessian_blocks(const MinimaxProblem& problem, const PointXY& point, double h) {
  const Index d1 = point.dim_x(), d2 = point.dim_y(), n = d1 + d2;
  Mat full(n, n);
  for (Index i = 0; i < n; ++i) {
    PointXY plus = point, minus = point;
    if (i < d1) {
      plus.x[i] += h;
      minus.x[i] -= h;
    } else {
      plus.y[i - d1] += h;
      minus.y[i - d1] -= h;
    }
    full.block(0, i, d1, 1) = (problem.grad_x(plus) - problem.grad_x(minus)) / (2.0 * h);
    full.block(d1, i, d2, 1) = (problem.grad_y(plus) - problem.grad_y(minus)) / (2.0 * h);
  }
  const Mat sym = 0.5 * (full + full.transpose());
  HessianBlocks out;
  out.hxx = sym.topLeftCorner(d1, d1);
  out.hxy = sym.topRightCorner(d1, d2);
  out.hyx = sym.bottomLeftCorner(d2, d1);
  out.hyy = sym.bottomRightCorner(d2, d2);
  return out;
}

double spectral_norm(const Mat& a) {
  if (a.size() == 0) return 0.0;
  Eigen::JacobiSVD<Mat> svd(a);
  return svd.singularValues()(0);
}

}  // namespace hfr::linalg
