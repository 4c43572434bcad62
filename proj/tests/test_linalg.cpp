#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "hfr/linalg.hpp"
#include "hfr/problems.hpp"
#include "test_util.hpp"

namespace hfr::linalg {
namespace {

using hfr::testing::M1;
using hfr::testing::Pt;
using hfr::testing::Vec2;
using hfr::testing::Vec3;

LinearOperator MatOp(const Mat& a) {
  return [a](const Vec& v) { return Vec(a * v); };
}

Mat RandomSpd(Index n, std::mt19937_64& rng, double lo = 0.5, double hi = 5.0) {
  std::normal_distribution<double> g;
  Mat q(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) q(i, j) = g(rng);
  Eigen::HouseholderQR<Mat> qr(q);
  const Mat basis = qr.householderQ();
  std::uniform_real_distribution<double> u(lo, hi);
  Vec d(n);
  for (Index i = 0; i < n; ++i) d[i] = u(rng);
  return basis * d.asDiagonal() * basis.transpose();
}

TEST(CgSolveSpd, IdentitySolvesInOneIteration) {
  CgParams p;
  const Vec b = Vec::LinSpaced(3, 1, 3);
  const auto res = cg_solve_spd(MatOp(Mat::Identity(3, 3)), b, p);
  EXPECT_EQ(res.iters, 1);
  EXPECT_LT((res.solution - b).norm(), 1e-15);
}

TEST(CgSolveSpd, DiagonalSystem) {
  CgParams p;
  Mat a = Vec2(2, 4).asDiagonal();
  const auto res = cg_solve_spd(MatOp(a), Vec2(2, 4), p);
  EXPECT_LE(res.iters, 2);
  EXPECT_LT((res.solution - Vec::Ones(2)).norm(), 1e-12);
  EXPECT_LT((a * res.solution - Vec2(2, 4)).norm(), 1e-12);
}

TEST(CgSolveSpd, SquaredSystemOnG1) {
  // H_yy = -2, H_yx = 4, grad_x = -2: (H_yy^2) b = H_yy (-H_yx grad_x).
  CgParams p;
  const auto res = cg_solve_spd(MatOp(M1(4.0)), Vec::Constant(1, -16.0), p);
  EXPECT_NEAR(res.solution[0], -4.0, 1e-14);
}

TEST(CgSolveSpd, ZeroRightHandSide) {
  const auto res = cg_solve_spd(MatOp(Mat::Identity(2, 2)), Vec::Zero(2), CgParams{});
  EXPECT_EQ(res.iters, 0);
  EXPECT_TRUE(res.solution.isZero(0.0));
}

TEST(CgSolveSpd, IndefiniteOperatorBreaksDown) {
  try {
    cg_solve_spd(MatOp(-Mat::Identity(2, 2)), Vec::Ones(2), CgParams{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kNumerical);
    EXPECT_STREQ(e.what(), "operator not positive definite");
  }
}

TEST(CgSolveSpd, NonFiniteIterateIsDivergence) {
  auto bad = [](const Vec& v) { return Vec(v * std::numeric_limits<double>::infinity()); };
  try {
    cg_solve_spd(bad, Vec::Ones(2), CgParams{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_STREQ(e.what(), "numerical divergence");
  }
}

TEST(CgSolveSpd, DampingMakesSemidefiniteSolvable) {
  CgParams p;
  p.damping = 1.0;
  Mat a = Vec2(0, 1).asDiagonal();
  const auto res = cg_solve_spd(MatOp(a), Vec2(1, 2), p);
  EXPECT_NEAR(res.solution[0], 1.0, 1e-12);
  EXPECT_NEAR(res.solution[1], 1.0, 1e-12);
}

TEST(CgSolveSpd, RejectsBadParams) {
  CgParams p;
  p.max_iters = 0;
  EXPECT_THROW(cg_solve_spd(MatOp(M1(1)), Vec::Ones(1), p), Error);
  p = CgParams{};
  p.residual_tol = 0.0;
  EXPECT_THROW(cg_solve_spd(MatOp(M1(1)), Vec::Ones(1), p), Error);
  p = CgParams{};
  p.damping = -1.0;
  EXPECT_THROW(cg_solve_spd(MatOp(M1(1)), Vec::Ones(1), p), Error);
}

TEST(CgSolveSpd, RandomSpdConvergesWithinDimension) {
  std::mt19937_64 rng(21);
  for (Index n = 1; n <= 16; ++n) {
    const Mat a = RandomSpd(n, rng);
    Vec b(n);
    std::normal_distribution<double> g;
    for (Index i = 0; i < n; ++i) b[i] = g(rng);
    CgParams p;
    p.max_iters = static_cast<int>(n);
    const auto res = cg_solve_spd(MatOp(a), b, p);
    EXPECT_LE((a * res.solution - b).norm(), 1e-10 * b.norm()) << "n = " << n;
    EXPECT_LE(res.iters, n);
  }
}

TEST(CgSolveSquared, MatchesSpdSolveOnSquaredOperator) {
  std::mt19937_64 rng(22);
  for (Index n : {1, 3, 6}) {
    Mat h = RandomSpd(n, rng);
    h -= 2.5 * Mat::Identity(n, n);  // indefinite but (almost surely) invertible
    Vec r = Vec::Random(n);
    CgParams p;
    p.max_iters = static_cast<int>(n) + 2;
    const auto sq = cg_solve_squared(MatOp(h), r, p);
    const Vec exact = h.fullPivLu().solve(r);
    EXPECT_LT((sq.solution - exact).norm(), 1e-8 * std::max(1.0, exact.norm()));
  }
}

TEST(CgSolveSquared, OperatorAppliesAreTwoPerIteration) {
  CgParams p;
  p.max_iters = 5;
  p.residual_tol = 1e-300;
  std::mt19937_64 rng(23);
  const Mat h = RandomSpd(8, rng) - 2.0 * Mat::Identity(8, 8);
  const auto res = cg_solve_squared(MatOp(h), Vec::Random(8), p);
  EXPECT_EQ(res.iters, 5);
  EXPECT_EQ(res.operator_applies, 10);
}

TEST(HessianFrRhsCg, G1AtOneOne) {
  CgParams p;
  const Vec b = hessianfr_rhs_cg(*problems::make_g1(), Pt(1, 1), 0.0, p);
  EXPECT_NEAR(b[0], -4.0, 1e-12);
}

TEST(HessianFrRhsCg, CriticalPointGivesZero) {
  const Vec b = hessianfr_rhs_cg(*problems::make_g3(), Pt(0, 0), 1.0, CgParams{});
  EXPECT_TRUE(b.isZero(0.0));
}

TEST(HessianFrRhsCg, DiagonalFollower) {
  // H_yy = diag(-1, -2), H_yx = 0; at y = (-1, -1) grad_y = (1, 2).
  Mat c = Vec2(-1, -2).asDiagonal();
  problems::QuadraticGame q(M1(1.0), Mat::Zero(1, 2), c);
  const PointXY p(Vec::Zero(1), Vec2(-1, -1));
  ASSERT_TRUE(q.grad_y(p).isApprox(Vec2(1, 2)));
  CgParams cg;
  cg.max_iters = 2;
  const Vec b = hessianfr_rhs_cg(q, p, 1.0, cg);
  EXPECT_NEAR(b[0], -1.0, 1e-12);
  EXPECT_NEAR(b[1], -1.0, 1e-12);
}

TEST(FdHvpYx, BilinearIsExactForAnyAlpha) {
  auto f = hfr::testing::Bilinear();
  // Dyadic steps make x + 3 alpha exact, so the quotient is exactly 3.
  for (double alpha : {0x1p-27, 0x1p-10, 0.5, 8.0}) EXPECT_EQ(fd_hvp_yx(*f, Pt(5, 3), alpha)[0], 3.0);
  // Otherwise the only error is rounding x + 3 alpha.
  for (double alpha : {1e-8, 1e-3, 0.3}) {
    const double bound = 4 * std::numeric_limits<double>::epsilon() * 5.0 / alpha;
    EXPECT_NEAR(fd_hvp_yx(*f, Pt(5, 3), alpha)[0], 3.0, bound) << "alpha = " << alpha;
  }
}

TEST(FdHvpYx, G1AtOneOne) {
  EXPECT_NEAR(fd_hvp_yx(*problems::make_g1(), Pt(1, 1), 1e-6)[0], -8.0, 1e-6);
}

TEST(FdHvpYx, ZeroDirectionGivesZero) {
  auto g3 = problems::make_g3();
  for (double alpha : {1e-6, 1.0}) EXPECT_TRUE(fd_hvp_yx(*g3, Pt(0, 0), alpha).isZero(0.0));
}

TEST(FdHvpYx, RejectsNonPositiveAlpha) {
  EXPECT_THROW(fd_hvp_yx(*problems::make_g1(), Pt(1, 1), 0.0), Error);
}

TEST(FdHvpYx, QuadraticsAcrossAlphaRange) {
  std::mt19937_64 rng(24);
  constexpr double kEps = std::numeric_limits<double>::epsilon();
  for (int k = 0; k < 5; ++k) {
    auto q = problems::make_random_strict_minimax(3, 4, 300 + k);
    const PointXY p = hfr::testing::RandomPoint(3, 4, rng);
    const Vec exact = q->b().transpose() * q->grad_x(p);
    for (double alpha : {1e-6, 1e-4, 1e-2}) {
      const Vec fd = fd_hvp_yx(*q, p, alpha);
      EXPECT_LE((fd - exact).norm() / exact.norm(), 1e-9) << "alpha = " << alpha;
    }
    // At alpha = 1e-8 cancellation in grad_y(x + alpha u) - grad_y(x) dominates;
    // the error stays within a few ulps of grad_y divided by alpha.
    const double alpha = 1e-8;
    const Vec fd = fd_hvp_yx(*q, p, alpha);
    const double scale = q->grad_y(p).norm() + q->c().norm() * p.y.norm() +
                         q->b().norm() * p.x.norm() + exact.norm();
    EXPECT_LE((fd - exact).norm(), 8 * kEps * scale / alpha);
  }
}

TEST(FdAlpha, DefaultFormula) {
  const PointXY p(Vec2(3, 4), Vec::Ones(2));
  EXPECT_DOUBLE_EQ(default_fd_alpha(p, Vec2(0, 2)), 1e-6 * 6.0 / 3.0);
}

TEST(DgUpdate, FirstCallIsIdentity) {
  const DgState s = dg_update({}, Vec::Ones(2), Vec::Ones(2));
  EXPECT_EQ(s.scale, 1.0);
  ASSERT_TRUE(s.prev_grad_y.has_value());
}

TEST(DgUpdate, ScalarQuadraticRecoversInverseCurvature) {
  // f = -y^2: grad_y = -2 y.
  DgState s = dg_update({}, Vec::Constant(1, -2.0), Vec::Constant(1, 1.0));
  s = dg_update(s, Vec::Constant(1, -1.0), Vec::Constant(1, 0.5));
  EXPECT_EQ(s.scale, -0.5);
}

TEST(DgUpdate, ExactOnRandomScalarQuadratics) {
  std::mt19937_64 rng(25);
  std::uniform_real_distribution<double> u(-5, 5);
  for (int k = 0; k < 20; ++k) {
    const double h = -std::exp2(std::uniform_int_distribution<int>(-4, 4)(rng));
    const double y0 = u(rng), y1 = u(rng);
    DgState s = dg_update({}, Vec::Constant(1, h * y0), Vec::Constant(1, y0));
    s = dg_update(s, Vec::Constant(1, h * y1), Vec::Constant(1, y1));
    EXPECT_NEAR(s.scale, 1.0 / h, 1e-12 / std::abs(h));
  }
}

TEST(DgUpdate, FlatRegionKeepsScale) {
  DgState s = dg_update({}, Vec::Constant(1, -2.0), Vec::Constant(1, 1.0));
  s = dg_update(s, Vec::Constant(1, -1.0), Vec::Constant(1, 0.5));
  s = dg_update(s, Vec::Constant(1, -1.0), Vec::Constant(1, 3.0));
  EXPECT_EQ(s.scale, -0.5);
}

TEST(EigSym, Diagonal) {
  Mat a = Vec3(3, 1, 2).asDiagonal();
  const auto e = eig_sym(a);
  EXPECT_TRUE(e.values.isApprox(Vec3(1, 2, 3)));
}

TEST(EigSym, G1Hessian) {
  Mat h(2, 2);
  h << -6, 4, 4, -2;
  const auto e = eig_sym(h);
  EXPECT_NEAR(e.values[0], -4 - 2 * std::sqrt(5.0), 1e-12);
  EXPECT_NEAR(e.values[1], -4 + 2 * std::sqrt(5.0), 1e-12);
}

TEST(EigSym, Identity) {
  EXPECT_TRUE(eig_sym(Mat::Identity(4, 4)).values.isApprox(Vec::Ones(4)));
}

TEST(EigSym, ResidualsAndOrthonormality) {
  std::mt19937_64 rng(26);
  for (Index n : {2, 7, 40}) {
    Mat a = Mat::Random(n, n);
    a = 0.5 * (a + a.transpose()).eval();
    const auto e = eig_sym(a);
    const double anorm = spectral_norm(a);
    for (Index i = 0; i < n; ++i)
      EXPECT_LE((a * e.vectors.col(i) - e.values[i] * e.vectors.col(i)).norm(), 1e-8 * anorm);
    for (Index i = 1; i < n; ++i) EXPECT_LE(e.values[i - 1], e.values[i]);
    EXPECT_LT((e.vectors.transpose() * e.vectors - Mat::Identity(n, n)).norm(), 1e-10);
  }
}

TEST(EigSym, RejectsAsymmetric) {
  Mat a(2, 2);
  a << 1, 2, 3, 4;
  EXPECT_THROW(eig_sym(a), Error);
  EXPECT_THROW(eig_sym(Mat::Zero(2, 3)), Error);
}

TEST(SpectralRadius, Rotation) {
  Mat a(2, 2);
  a << 0, 1, -1, 0;
  EXPECT_NEAR(spectral_radius(a), 1.0, 1e-14);
}

TEST(SpectralRadius, UpperTriangular) {
  Mat a(2, 2);
  a << 0.8, 5.0, 0.0, 0.8;
  EXPECT_NEAR(spectral_radius(a), 0.8, 1e-7);
}

TEST(SpectralRadius, NonFiniteInputIsUnresolved) {
  Mat a = Mat::Identity(2, 2);
  a(0, 1) = std::nan("");
  try {
    spectral_radius(a);
    FAIL();
  } catch (const Error& e) {
    EXPECT_STREQ(e.what(), "spectrum not resolved");
  }
}

TEST(SpectralRadius, SimilarityInvariance) {
  std::mt19937_64 rng(27);
  std::normal_distribution<double> g;
  for (int k = 0; k < 20; ++k) {
    const Index n = 2 + k % 6;
    Mat a(n, n);
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < n; ++j) a(i, j) = g(rng);
    // Well-conditioned S: identity plus a small perturbation.
    Mat s = Mat::Identity(n, n);
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < n; ++j) s(i, j) += 0.2 * g(rng) / std::sqrt(double(n));
    const Mat b = s * a * s.inverse();
    const double ra = spectral_radius(a), rb = spectral_radius(b);
    EXPECT_LE(std::abs(ra - rb), 1e-8 * ra);
  }
}

TEST(FdHessianBlocks, MatchesAnalyticOnG3) {
  auto g3 = problems::make_g3();
  const PointXY p = Pt(0.3, -0.7);
  const HessianBlocks fd = fd_hessian_blocks(*g3, p);
  const HessianBlocks an = *g3->hessian_blocks(p);
  EXPECT_LT((fd.full() - an.full()).cwiseAbs().maxCoeff(), 1e-6);
  EXPECT_TRUE(fd.consistent());
}

TEST(HessianBlocksTest, ConsistencyDetectsAsymmetry) {
  HessianBlocks h{M1(1), M1(2), M1(2), M1(-1)};
  EXPECT_TRUE(h.consistent());
  h.hyx(0, 0) = 2.1;
  EXPECT_FALSE(h.consistent());
}

}  // namespace
}  // namespace hfr::linalg
