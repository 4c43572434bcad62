#pragma once

#include <functional>
#include <optional>

#include "hfr/problem.hpp"
#include "hfr/types.hpp"

namespace hfr::linalg {

using LinearOperator = std::function<Vec(const Vec&)>;

struct CgParams {
  int max_iters = 10;
  double residual_tol = 1e-10;  // relative to ||b||
  double damping = 0.0;         // lambda, adds lambda * I to the operator

  void validate() const;
};

struct CgResult {
  Vec solution;
  int iters = 0;
  double residual = 0.0;  // ||A x - b|| at exit
  int operator_applies = 0;
};

/// Plain conjugate gradient on (A + damping I) x = b, starting from x = 0.
///
/// Throws NumericalError("operator not positive definite") when a search
/// direction has non-positive curvature, and "numerical divergence" on
/// non-finite iterates.
CgResult cg_solve_spd(const LinearOperator& apply_a, const Vec& b, const CgParams& params);

/// Solves (H^2 + damping I) x = H r for a symmetric (possibly indefinite) H.
///
/// Runs the conjugate gradient recurrence for the squared system in its
/// normal-equation form, so H r is never formed separately: the first product
/// with H produces the right-hand side and the final iteration skips the
/// residual refresh. With no early exit that is exactly 2 * max_iters
/// products with H.
CgResult cg_solve_squared(const LinearOperator& apply_h, const Vec& r, const CgParams& params);

/// b ~= c2 H_yy^{-1} grad_y f - H_yy^{-1} H_yx grad_x f, via cg_solve_squared
/// with the problem's own Hessian-vector products.
Vec hessianfr_rhs_cg(const MinimaxProblem& problem, const PointXY& point, double c2,
                     const CgParams& params);

/// Default forward-difference step: 1e-6 (1 + ||x||) / (1 + ||direction||).
double default_fd_alpha(const PointXY& point, const Vec& direction);

/// (grad_y f(x + alpha u, y) - grad_y f(x, y)) / alpha, i.e. H_yx u.
/// `grad_y_at_point` is grad_y f(x, y) when the caller already has it.
Vec fd_hvp_yx(const MinimaxProblem& problem, const PointXY& point, const Vec& direction,
              double alpha, const std::optional<Vec>& grad_y_at_point = std::nullopt);

/// H_yx grad_x f by forward differences along grad_x f.
Vec fd_hvp_yx(const MinimaxProblem& problem, const PointXY& point, double alpha);

/// Secant estimate of H_yy^{-1} as a multiple of the identity.
struct DgState {
  std::optional<Vec> prev_grad_y;
  std::optional<Vec> prev_y;
  double scale = 1.0;
};

/// Updates the scalar estimate <dg, dy> / ||dg||^2 from the newest
/// (grad_y, y) pair. First call leaves scale = 1; ||dg||^2 < 1e-24 keeps the
/// previous scale.
DgState dg_update(DgState state, const Vec& grad_y_now, const Vec& y_now);

struct SymEigen {
  Vec values;   // ascending
  Mat vectors;  // orthonormal columns
};

/// Dense symmetric eigendecomposition. Throws on asymmetric input (1e-10
/// relative to the largest entry).
SymEigen eig_sym(const Mat& a);

/// Ascending eigenvalues only.
Vec eigvals_sym(const Mat& a);

/// Maximum modulus over the (possibly complex) spectrum of a square matrix.
double spectral_radius(const Mat& a);

/// Dense Hessian blocks from central differences of the gradients.
HessianBlocks fd_hessian_blocks(const MinimaxProblem& problem, const PointXY& point,
                                double h = 1e-5);

/// Largest singular value.
double spectral_norm(const Mat& a);

}  // namespace hfr::linalg
