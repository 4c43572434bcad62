#include <cmath>
#include <random>

#include <Eigen/LU>
#include <Eigen/QR>

#include "hfr/linalg.hpp"
#include "hfr/problems.hpp"

namespace hfr::problems {

namespace {

Vec Scalar(double v) { return Vec::Constant(1, v); }

}  // namespace

ToyProblem::Derivs ToyProblem::Evaluate(double x, double y) const {
  switch (tag_) {
    case ToyTag::kG1:
      return {-3 * x * x - y * y + 4 * x * y, -6 * x + 4 * y, -2 * y + 4 * x, -6.0, 4.0, -2.0};
    case ToyTag::kG2:
      return {3 * x * x + y * y + 4 * x * y, 6 * x + 4 * y, 2 * y + 4 * x, 6.0, 4.0, 2.0};
    case ToyTag::kG3:
      break;
  }
  // g3 = u * e with u = 4x^2 - w^2 - 0.1 y^4, w = y - 3x + 0.05 x^3,
  // e = exp(-0.01 (x^2 + y^2)). Product rule on every derivative.
  const double w = y - 3 * x + 0.05 * x * x * x;
  const double wx = -3 + 0.15 * x * x;
  const double wxx = 0.3 * x;
  const double u = 4 * x * x - w * w - 0.1 * y * y * y * y;
  const double ux = 8 * x - 2 * w * wx;
  const double uy = -2 * w - 0.4 * y * y * y;
  const double uxx = 8 - 2 * wx * wx - 2 * w * wxx;
  const double uxy = -2 * wx;
  const double uyy = -2 - 1.2 * y * y;
  const double e = std::exp(-0.01 * (x * x + y * y));
  const double ex = -0.02 * x * e;
  const double ey = -0.02 * y * e;
  const double exx = (-0.02 + 0.0004 * x * x) * e;
  const double exy = 0.0004 * x * y * e;
  const double eyy = (-0.02 + 0.0004 * y * y) * e;
  return {u * e,
          ux * e + u * ex,
          uy * e + u * ey,
          uxx * e + 2 * ux * ex + u * exx,
          uxy * e + ux * ey + uy * ex + u * exy,
          uyy * e + 2 * uy * ey + u * eyy};
}

double ToyProblem::value(const PointXY& p) const { return Evaluate(p.x[0], p.y[0]).f; }
Vec ToyProblem::grad_x(const PointXY& p) const { return Scalar(Evaluate(p.x[0], p.y[0]).fx); }
Vec ToyProblem::grad_y(const PointXY& p) const { return Scalar(Evaluate(p.x[0], p.y[0]).fy); }

Vec ToyProblem::hvp_yy(const PointXY& p, const Vec& v) const {
  return Scalar(Evaluate(p.x[0], p.y[0]).fyy * v[0]);
}
Vec ToyProblem::hvp_yx(const PointXY& p, const Vec& u) const {
  return Scalar(Evaluate(p.x[0], p.y[0]).fxy * u[0]);
}
Vec ToyProblem::hvp_xy(const PointXY& p, const Vec& v) const {
  return Scalar(Evaluate(p.x[0], p.y[0]).fxy * v[0]);
}
Vec ToyProblem::hvp_xx(const PointXY& p, const Vec& u) const {
  return Scalar(Evaluate(p.x[0], p.y[0]).fxx * u[0]);
}

std::optional<HessianBlocks> ToyProblem::hessian_blocks(const PointXY& p) const {
  const Derivs d = Evaluate(p.x[0], p.y[0]);
  HessianBlocks h;
  h.hxx = Mat::Constant(1, 1, d.fxx);
  h.hxy = Mat::Constant(1, 1, d.fxy);
  h.hyx = Mat::Constant(1, 1, d.fxy);
  h.hyy = Mat::Constant(1, 1, d.fyy);
  return h;
}

std::shared_ptr<ToyProblem> make_g1() { return std::make_shared<ToyProblem>(ToyTag::kG1); }
std::shared_ptr<ToyProblem> make_g2() { return std::make_shared<ToyProblem>(ToyTag::kG2); }
std::shared_ptr<ToyProblem> make_g3() { return std::make_shared<ToyProblem>(ToyTag::kG3); }

// ---------------------------------------------------------------------------

QuadraticGame::QuadraticGame(Mat a, Mat b, Mat c)
    : QuadraticGame(a, b, c, Vec::Zero(a.rows()), Vec::Zero(c.rows())) {}

QuadraticGame::QuadraticGame(Mat a, Mat b, Mat c, Vec lin_x, Vec lin_y)
    : a_(std::move(a)), b_(std::move(b)), c_(std::move(c)),
      lin_x_(std::move(lin_x)), lin_y_(std::move(lin_y)) {
  if (a_.rows() < 1 || c_.rows() < 1) throw ConfigError("quadratic game needs d1, d2 >= 1");
  if (a_.rows() != a_.cols() || c_.rows() != c_.cols())
    throw ConfigError("quadratic game blocks A and C must be square");
  if (b_.rows() != a_.rows() || b_.cols() != c_.rows())
    throw ConfigError("quadratic game block B has the wrong shape");
  if (lin_x_.size() != a_.rows() || lin_y_.size() != c_.rows())
    throw ConfigError("quadratic game linear terms have the wrong shape");
  const auto asym = [](const Mat& m) {
    return (m - m.transpose()).cwiseAbs().maxCoeff() >
           1e-12 * std::max(1.0, m.cwiseAbs().maxCoeff());
  };
  if (asym(a_) || asym(c_)) throw ConfigError("quadratic game blocks A and C must be symmetric");
}

double QuadraticGame::value(const PointXY& p) const {
  return 0.5 * p.x.dot(a_ * p.x) + p.x.dot(b_ * p.y) + 0.5 * p.y.dot(c_ * p.y) +
         lin_x_.dot(p.x) + lin_y_.dot(p.y);
}

Vec QuadraticGame::grad_x(const PointXY& p) const { return a_ * p.x + b_ * p.y + lin_x_; }

Vec QuadraticGame::grad_y(const PointXY& p) const {
  return b_.transpose() * p.x + c_ * p.y + lin_y_;
}

HessianBlocks QuadraticGame::blocks() const {
  return HessianBlocks{a_, b_, b_.transpose(), c_};
}

std::optional<HessianBlocks> QuadraticGame::hessian_blocks(const PointXY&) const {
  return blocks();
}

PointXY QuadraticGame::critical_point() const {
  const Mat h = blocks().full();
  Vec rhs(h.rows());
  rhs << -lin_x_, -lin_y_;
  Eigen::FullPivLU<Mat> lu(h);
  if (!lu.isInvertible()) throw NumericalError("quadratic game Hessian is singular");
  return PointXY::FromStacked(lu.solve(rhs), a_.rows());
}

std::shared_ptr<QuadraticGame> make_quadratic(Mat a, Mat b, Mat c) {
  return std::make_shared<QuadraticGame>(std::move(a), std::move(b), std::move(c));
}

std::shared_ptr<QuadraticGame> make_quadratic_from_schur(const Mat& schur, const Mat& hxy,
                                                         const Mat& hyy) {
  Eigen::FullPivLU<Mat> lu(hyy);
  if (!lu.isInvertible()) throw ConfigError("follower block must be invertible");
  Mat hxx = schur + hxy * lu.solve(hxy.transpose());
  hxx = 0.5 * (hxx + hxx.transpose());
  return make_quadratic(hxx, hxy, hyy);
}

namespace {

Mat RandomOrthogonal(Index n, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Mat g(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) g(i, j) = normal(rng);
  Eigen::HouseholderQR<Mat> qr(g);
  return qr.householderQ() * Mat::Identity(n, n);
}

Mat RandomSpectrum(Index n, double lo, double hi, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> uni(lo, hi);
  Vec eig(n);
  for (Index i = 0; i < n; ++i) eig[i] = uni(rng);
  const Mat q = RandomOrthogonal(n, rng);
  Mat m = q * eig.asDiagonal() * q.transpose();
  return 0.5 * (m + m.transpose());
}

Mat Gaussian(Index rows, Index cols, double scale, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Mat m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) m(i, j) = scale * normal(rng);
  return m;
}

Mat SymmetricGaussian(Index n, double scale, std::mt19937_64& rng) {
  const Mat g = Gaussian(n, n, scale, rng);
  return 0.5 * (g + g.transpose());
}

}  // namespace

std::shared_ptr<QuadraticGame> make_random_strict_minimax(Index d1, Index d2, std::uint64_t seed,
                                                          double eig_lo, double eig_hi) {
  if (d1 < 1 || d2 < 1) throw ConfigError("dimensions must be >= 1");
  if (!(eig_lo > 0.0) || !(eig_hi >= eig_lo)) throw ConfigError("bad eigenvalue range");
  std::mt19937_64 rng(seed);
  const Mat schur = RandomSpectrum(d1, eig_lo, eig_hi, rng);
  const Mat hyy = -RandomSpectrum(d2, eig_lo, eig_hi, rng);
  const Mat hxy = Gaussian(d1, d2, 1.0, rng);
  return make_quadratic_from_schur(schur, hxy, hyy);
}

// ---------------------------------------------------------------------------

FiniteSumQuadratic::FiniteSumQuadratic(std::vector<std::shared_ptr<const QuadraticGame>> terms,
                                       std::shared_ptr<const QuadraticGame> average)
    : terms_(std::move(terms)),
      average_(std::move(average)),
      sum_(std::vector<std::shared_ptr<const MinimaxProblem>>(terms_.begin(), terms_.end())) {}

SmoothnessBounds FiniteSumQuadratic::bounds(double radius) const {
  SmoothnessBounds out;
  for (const auto& t : terms_) {
    const Index d1 = t->dim_x(), d2 = t->dim_y();
    Mat row_x(d1, d1 + d2), row_y(d2, d1 + d2);
    row_x << t->a(), t->b();
    row_y << t->b().transpose(), t->c();
    out.rho_xy = std::max(out.rho_xy, linalg::spectral_norm(t->b()));
    out.rho_yy = std::max(out.rho_yy, linalg::spectral_norm(t->c()));
    out.rho_x = std::max(out.rho_x, linalg::spectral_norm(row_x) * radius + t->lin_x().norm());
    out.rho_y = std::max(out.rho_y, linalg::spectral_norm(row_y) * radius + t->lin_y().norm());
  }
  return out;
}

std::shared_ptr<FiniteSumQuadratic> make_finite_sum_quadratic(const FiniteSumQuadraticOptions& opt) {
  if (opt.n < 1) throw ConfigError("finite-sum quadratic needs n >= 1");
  const auto avg = make_random_strict_minimax(opt.d1, opt.d2, opt.seed, opt.eig_lo, opt.eig_hi);
  std::mt19937_64 rng(opt.seed ^ 0x9e3779b97f4a7c15ULL);

  const std::size_t n = opt.n;
  std::vector<Mat> da(n), db(n), dc(n);
  std::vector<Vec> la(n), lb(n);
  Mat mean_a = Mat::Zero(opt.d1, opt.d1), mean_b = Mat::Zero(opt.d1, opt.d2),
      mean_c = Mat::Zero(opt.d2, opt.d2);
  Vec mean_la = Vec::Zero(opt.d1), mean_lb = Vec::Zero(opt.d2);
  for (std::size_t i = 0; i < n; ++i) {
    da[i] = SymmetricGaussian(opt.d1, opt.perturbation, rng);
    db[i] = Gaussian(opt.d1, opt.d2, opt.perturbation, rng);
    dc[i] = SymmetricGaussian(opt.d2, opt.perturbation, rng);
    la[i] = Gaussian(opt.d1, 1, opt.linear_scale, rng);
    lb[i] = Gaussian(opt.d2, 1, opt.linear_scale, rng);
    mean_a += da[i];
    mean_b += db[i];
    mean_c += dc[i];
    mean_la += la[i];
    mean_lb += lb[i];
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  std::vector<std::shared_ptr<const QuadraticGame>> terms;
  terms.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    terms.push_back(std::make_shared<QuadraticGame>(
        avg->a() + da[i] - mean_a * inv_n, avg->b() + db[i] - mean_b * inv_n,
        avg->c() + dc[i] - mean_c * inv_n, la[i] - mean_la * inv_n, lb[i] - mean_lb * inv_n));
  }
  return std::make_shared<FiniteSumQuadratic>(std::move(terms), avg);
}

}  // namespace hfr::problems
