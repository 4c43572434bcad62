#include "hfr/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include "hfr/linalg.hpp"
#include "hfr/optimizers.hpp"

namespace hfr::analysis {

namespace {

Mat Symmetrize(const Mat& a) { return 0.5 * (a + a.transpose()); }

Mat FollowerInverse(const Mat& hyy) {
  Eigen::FullPivLU<Mat> lu(hyy);
  lu.setThreshold(1e-12);
  if (!lu.isInvertible()) throw NumericalError("follower Hessian singular");
  return lu.inverse();
}

void RequireCritical(const Vec& gx, const Vec& gy, double grad_tol) {
  if (gx.norm() > grad_tol || gy.norm() > grad_tol) throw ConfigError("not a critical point");
}

double MaxAbsOneMinus(double eta, const Vec& eigs) {
  double r = 0.0;
  for (Index i = 0; i < eigs.size(); ++i) r = std::max(r, std::abs(1.0 - eta * eigs[i]));
  return r;
}

SpectralReport MakeReport(std::string name, Mat j, double rho) {
  SpectralReport rep;
  rep.algorithm = std::move(name);
  rep.jacobian = std::move(j);
  rep.spectral_radius = rho;
  rep.converges = rho < 1.0;
  return rep;
}

// -c1 H_yy + c2 I
Mat FollowerBlock(const HessianBlocks& h, double c1, double c2) {
  return Symmetrize(-c1 * h.hyy + c2 * Mat::Identity(h.dim_y(), h.dim_y()));
}

}  // namespace

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::kStrict: return "Strict";
    case Verdict::kNonStrictNecessaryOnly: return "NonStrictNecessaryOnly";
    case Verdict::kNo: return "No";
    case Verdict::kDegenerate: return "Degenerate";
  }
  return "unknown";
}

double default_tau(const HessianBlocks& h) { return 1e-8 * (1.0 + linalg::spectral_norm(h.full())); }

Mat schur_complement(const HessianBlocks& h) {
  return Symmetrize(h.hxx - h.hxy * FollowerInverse(h.hyy) * h.hyx);
}

Verdict classify_nash(const HessianBlocks& h, const Vec& grad_x, const Vec& grad_y,
                      double grad_tol, std::optional<double> tau) {
  RequireCritical(grad_x, grad_y, grad_tol);
  const double t = tau ? *tau : default_tau(h);
  const Vec ex = linalg::eigvals_sym(Symmetrize(h.hxx));
  const Vec ey = linalg::eigvals_sym(Symmetrize(h.hyy));
  if (ex.minCoeff() < -t || ey.maxCoeff() > t) return Verdict::kNo;
  if (ex.minCoeff() > t && ey.maxCoeff() < -t) return Verdict::kStrict;
  return Verdict::kDegenerate;
}

Verdict classify_minimax(const HessianBlocks& h, const Vec& grad_x, const Vec& grad_y,
                         double grad_tol, std::optional<double> tau) {
  RequireCritical(grad_x, grad_y, grad_tol);
  const double t = tau ? *tau : default_tau(h);
  const Vec ey = linalg::eigvals_sym(Symmetrize(h.hyy));
  if (ey.maxCoeff() > t) return Verdict::kNo;
  if (ey.maxCoeff() >= -t) return Verdict::kDegenerate;
  const Vec es = linalg::eigvals_sym(schur_complement(h));
  if (es.minCoeff() < -t) return Verdict::kNo;
  if (es.minCoeff() <= t) return Verdict::kDegenerate;
  return Verdict::kStrict;
}

CriticalPointReport classify_point(const MinimaxProblem& f, const PointXY& p, double grad_tol) {
  p.validate();
  const Vec gx = f.grad_x(p);
  const Vec gy = f.grad_y(p);
  CriticalPointReport rep;
  rep.grad_norm_x = gx.norm();
  rep.grad_norm_y = gy.norm();
  rep.is_critical = rep.grad_norm_x <= grad_tol && rep.grad_norm_y <= grad_tol;
  if (!rep.is_critical) throw ConfigError("not a critical point");
  auto blocks = f.hessian_blocks(p);
  const HessianBlocks h = blocks ? *blocks : linalg::fd_hessian_blocks(f, p);
  rep.tau = default_tau(h);
  rep.nash = classify_nash(h, gx, gy, grad_tol, rep.tau);
  rep.minimax = classify_minimax(h, gx, gy, grad_tol, rep.tau);
  rep.evidence.hxx = linalg::eigvals_sym(Symmetrize(h.hxx));
  rep.evidence.hyy = linalg::eigvals_sym(Symmetrize(h.hyy));
  if (rep.evidence.hyy.cwiseAbs().minCoeff() > rep.tau)
    rep.evidence.schur = linalg::eigvals_sym(schur_complement(h));
  return rep;
}

Mat similar_hessianfr(const HessianBlocks& h, double eta_x, double c1, double c2) {
  const Index d1 = h.dim_x(), d2 = h.dim_y();
  Mat m = Mat::Zero(d1 + d2, d1 + d2);
  m.topLeftCorner(d1, d1) = schur_complement(h);
  m.topRightCorner(d1, d2) = h.hxy;
  m.bottomRightCorner(d2, d2) = FollowerBlock(h, c1, c2);
  return Mat::Identity(d1 + d2, d1 + d2) - eta_x * m;
}

SpectralReport jacobian_hessianfr(const HessianBlocks& h, double eta_x, double c1, double c2) {
  return jacobian_hessianfr_preconditioned(h, eta_x, c1, c2, Vec::Ones(h.dim_x()),
                                           Vec::Ones(h.dim_y()));
}

SpectralReport jacobian_hessianfr_preconditioned(const HessianBlocks& h, double eta_x, double c1,
                                                 double c2, const Vec& p1, const Vec& p2) {
  const Index d1 = h.dim_x(), d2 = h.dim_y();
  if (p1.size() != d1 || p2.size() != d2) throw ConfigError("preconditioner size mismatch");
  if (!(p1.minCoeff() > 0.0) || !(p2.minCoeff() > 0.0))
    throw ConfigError("preconditioners must be positive");
  const Mat hyy_inv = FollowerInverse(h.hyy);
  Mat k = Mat::Zero(d1 + d2, d1 + d2);
  k.topLeftCorner(d1, d1) = p1.asDiagonal();
  k.bottomLeftCorner(d2, d1) = -hyy_inv * h.hyx * p1.asDiagonal();
  k.bottomRightCorner(d2, d2) =
      (-c1 * Mat::Identity(d2, d2) + c2 * hyy_inv) * p2.asDiagonal();
  Mat j = Mat::Identity(d1 + d2, d1 + d2) - eta_x * k * h.full();

  // P1 S is similar to P1^{1/2} S P1^{1/2}; B P2 to P2^{1/2} B P2^{1/2}.
  const Vec s1 = p1.cwiseSqrt(), s2 = p2.cwiseSqrt();
  const Vec leader = linalg::eigvals_sym(Symmetrize(s1.asDiagonal() * schur_complement(h) *
                                                    s1.asDiagonal()));
  const Vec follower = linalg::eigvals_sym(
      Symmetrize(s2.asDiagonal() * FollowerBlock(h, c1, c2) * s2.asDiagonal()));
  const bool unit = (p1.array() == 1.0).all() && (p2.array() == 1.0).all();
  if (!unit && (leader.minCoeff() <= 0.0 || follower.minCoeff() <= 0.0))
    throw NumericalError("preconditioned blocks lack a positive real spectrum");

  const double rho_blocks =
      std::max(MaxAbsOneMinus(eta_x, leader), MaxAbsOneMinus(eta_x, follower));
  const double rho_dense = linalg::spectral_radius(j);
  SpectralReport rep = MakeReport(unit ? "hessianfr" : "hessianfr_preconditioned", std::move(j),
                                  rho_blocks);
  rep.similarity_gap = std::abs(rho_dense - rho_blocks) / std::max(1.0, rho_blocks);
  return rep;
}

SpectralReport jacobian_fr(const HessianBlocks& h, double eta_x, double c1) {
  SpectralReport rep = jacobian_hessianfr(h, eta_x, c1, 0.0);
  rep.algorithm = "fr";
  return rep;
}

SpectralReport jacobian_gdn(const HessianBlocks& h, double eta_x) {
  if (!(eta_x > 0.0)) throw ConfigError("eta_x must be > 0");
  SpectralReport rep = jacobian_hessianfr(h, eta_x, 0.0, 1.0 / eta_x);
  rep.algorithm = "gdn";
  return rep;
}

Mat ttsgda_u(const HessianBlocks& h, double c) {
  const Index d1 = h.dim_x(), d2 = h.dim_y();
  Mat u(d1 + d2, d1 + d2);
  u.topLeftCorner(d1, d1) = h.hxx;
  u.topRightCorner(d1, d2) = h.hxy;
  u.bottomLeftCorner(d2, d1) = -c * h.hyx;
  u.bottomRightCorner(d2, d2) = -c * h.hyy;
  return u;
}

SpectralReport jacobian_ttsgda_u(const Mat& u, double eta_x) {
  Mat j = Mat::Identity(u.rows(), u.cols()) - eta_x * u;
  const double rho = linalg::spectral_radius(j);
  return MakeReport("ttsgda", std::move(j), rho);
}

SpectralReport jacobian_ttsgda(const HessianBlocks& h, double eta_x, double c) {
  return jacobian_ttsgda_u(ttsgda_u(h, c), eta_x);
}

SpectralReport jacobian_eg_u(const Mat& u, double eta_x) {
  Mat j = Mat::Identity(u.rows(), u.cols()) - eta_x * u + eta_x * eta_x * (u * u);
  const double rho = linalg::spectral_radius(j);
  return MakeReport("eg", std::move(j), rho);
}

SpectralReport jacobian_eg(const HessianBlocks& h, double eta_x, double c) {
  return jacobian_eg_u(ttsgda_u(h, c), eta_x);
}

namespace {

struct Ranges {
  double s_min, s_max, h_min, h_max;  // Schur and -H_yy extremes
};

Ranges StrictMinimaxRanges(const HessianBlocks& h) {
  const Vec zx = Vec::Zero(h.dim_x()), zy = Vec::Zero(h.dim_y());
  if (classify_minimax(h, zx, zy) != Verdict::kStrict)
    throw ConfigError("rate bounds need a strict local minimax");
  const Vec s = linalg::eigvals_sym(schur_complement(h));
  const Vec y = linalg::eigvals_sym(Symmetrize(-h.hyy));
  return {s.minCoeff(), s.maxCoeff(), y.minCoeff(), y.maxCoeff()};
}

double Kappa(const Ranges& r, double c1, double c2) {
  const double lo = c1 * r.h_min + c2, hi = c1 * r.h_max + c2;
  return std::min(r.s_min, lo) / std::max(r.s_max, hi);
}

}  // namespace

RateBounds rate_bounds(const HessianBlocks& h, double c1, double c2) {
  if (!(c1 >= 0.0) || !(c2 >= 0.0) || !(c1 > 0.0 || c2 > 0.0))
    throw ConfigError("need c1, c2 >= 0 with c1 + c2 > 0");
  const Ranges r = StrictMinimaxRanges(h);
  RateBounds out;
  out.kappa_hfr = Kappa(r, c1, c2);
  out.kappa_fr = c1 > 0.0 ? Kappa(r, c1, 0.0) : 0.0;
  out.kappa_gdn = r.s_min / r.s_max;
  out.eta_x_max_hfr = 2.0 / std::max(r.s_max, c1 * r.h_max + c2);
  return out;
}

std::pair<double, double> match_gdn_rate(const HessianBlocks& h) {
  const Ranges r = StrictMinimaxRanges(h);
  // Map [h_min, h_max] affinely into [s_min, s_max] with c1, c2 >= 0.
  double c1 = r.s_min / r.h_min;
  if (r.h_max > r.h_min) c1 = std::min(c1, (r.s_max - r.s_min) / (r.h_max - r.h_min));
  const double c2 = std::max(0.0, r.s_min - c1 * r.h_min);
  return {c1, c2};
}

namespace {

long CeilBound(double v) {
  if (!std::isfinite(v)) throw NumericalError("sample-size bound is not finite");
  // Guard against values a few ulps above an integer.
  return static_cast<long>(std::ceil(v * (1.0 - 1e-12)));
}

void RequireEpsDelta(double epsilon, double delta) {
  if (!(epsilon > 0.0)) throw ConfigError("epsilon must be > 0");
  if (!(delta > 0.0 && delta < 1.0)) throw ConfigError("delta must lie in (0, 1)");
}

}  // namespace

void SampleSizeInputs::validate() const {
  RequireEpsDelta(epsilon, delta);
  if (!(rho_x >= 0.0 && rho_y >= 0.0 && rho_xy >= 0.0 && rho_yy >= 0.0))
    throw ConfigError("smoothness constants must be >= 0");
  if (d1 < 1 || d2 < 1) throw ConfigError("dimensions must be >= 1");
  if (horizon < 1) throw ConfigError("horizon T must be >= 1");
  if (epsilon > rho_xy) throw ConfigError("rectangular bound inapplicable");
}

double SampleSizeTerms::max() const { return std::max({hessian_yy, hessian_xy, grad_x, grad_y}); }

SampleSizeTerms sample_size_terms(const SampleSizeInputs& in) {
  in.validate();
  const double e2 = in.epsilon * in.epsilon;
  const double t = static_cast<double>(in.horizon);
  const double vec_log = 0.25 + std::log(4.0 * t) - std::log(in.delta);
  SampleSizeTerms out;
  out.hessian_yy = 16.0 * in.rho_yy * in.rho_yy / e2 *
                   std::log(8.0 * static_cast<double>(in.d2) * t / in.delta);
  out.hessian_xy = 16.0 * in.rho_xy * in.rho_xy / e2 *
                   std::log(4.0 * static_cast<double>(in.d1 + in.d2) * t / in.delta);
  out.grad_x = 32.0 * in.rho_x * in.rho_x / e2 * vec_log;
  out.grad_y = 32.0 * in.rho_y * in.rho_y / e2 * vec_log;
  return out;
}

long sample_size_bound(const SampleSizeInputs& in) { return CeilBound(sample_size_terms(in).max()); }

namespace {

// Formula with the 1/eps^2 factor removed.
double LemmaNumerator(LemmaKind kind, double rho, double delta, long d1, long d2) {
  switch (kind) {
    case LemmaKind::kHermitian:
      return 16.0 * rho * rho * std::log(2.0 * static_cast<double>(d2) / delta);
    case LemmaKind::kRectangular:
      return 16.0 * rho * rho * std::log(static_cast<double>(d1 + d2) / delta);
    case LemmaKind::kVector:
      return 32.0 * rho * rho * (0.25 - std::log(delta));
  }
  return 0.0;
}

}  // namespace

long lemma_bound(LemmaKind kind, double rho, double epsilon, double delta, long d1, long d2) {
  RequireEpsDelta(epsilon, delta);
  if (!(rho >= 0.0)) throw ConfigError("rho must be >= 0");
  if (d1 < 1 || d2 < 1) throw ConfigError("dimensions must be >= 1");
  if (kind == LemmaKind::kRectangular && epsilon > rho)
    throw ConfigError("rectangular bound inapplicable");
  return CeilBound(LemmaNumerator(kind, rho, delta, d1, d2) / (epsilon * epsilon));
}

double lemma_epsilon(LemmaKind kind, double rho, std::size_t batch, double delta, long d1,
                     long d2) {
  if (batch < 1) throw ConfigError("batch size must be >= 1");
  if (!(delta > 0.0 && delta < 1.0)) throw ConfigError("delta must lie in (0, 1)");
  return std::sqrt(LemmaNumerator(kind, rho, delta, d1, d2) / static_cast<double>(batch));
}

ConcentrationReport empirical_concentration_check(const FiniteSumProblem& fs, const PointXY& point,
                                                  std::size_t batch_size, int trials,
                                                  std::uint64_t seed, double delta) {
  if (trials < 1) throw ConfigError("trials must be >= 1");
  point.validate();
  const std::size_t n = fs.size();
  auto blocks_of = [&](const MinimaxProblem& f) {
    auto b = f.hessian_blocks(point);
    return b ? *b : linalg::fd_hessian_blocks(f, point);
  };

  // Per-component quantities, then the full average.
  std::vector<HessianBlocks> comp_h(n);
  std::vector<Vec> comp_gx(n), comp_gy(n);
  double rho_yy = 0.0, rho_xy = 0.0, rho_x = 0.0, rho_y = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto c = fs.component(i);
    comp_h[i] = blocks_of(*c);
    comp_gx[i] = c->grad_x(point);
    comp_gy[i] = c->grad_y(point);
    rho_yy = std::max(rho_yy, linalg::spectral_norm(comp_h[i].hyy));
    rho_xy = std::max(rho_xy, linalg::spectral_norm(comp_h[i].hxy));
    rho_x = std::max(rho_x, comp_gx[i].norm());
    rho_y = std::max(rho_y, comp_gy[i].norm());
  }
  const HessianBlocks full_h = blocks_of(fs.full());
  const Vec full_gx = fs.full().grad_x(point);
  const Vec full_gy = fs.full().grad_y(point);

  const long d1 = point.dim_x(), d2 = point.dim_y();
  std::vector<double> dev_yy, dev_xy, dev_x, dev_y;
  opt::MinibatchSampler sampler(n, batch_size, seed);
  const double inv = 1.0 / static_cast<double>(batch_size);
  for (int t = 0; t < trials; ++t) {
    const auto idx = sampler.next();
    Mat hyy = Mat::Zero(d2, d2), hxy = Mat::Zero(d1, d2);
    Vec gx = Vec::Zero(d1), gy = Vec::Zero(d2);
    for (std::size_t i : idx) {
      hyy += comp_h[i].hyy;
      hxy += comp_h[i].hxy;
      gx += comp_gx[i];
      gy += comp_gy[i];
    }
    dev_yy.push_back(linalg::spectral_norm(hyy * inv - full_h.hyy));
    dev_xy.push_back(linalg::spectral_norm(hxy * inv - full_h.hxy));
    dev_x.push_back((gx * inv - full_gx).norm());
    dev_y.push_back((gy * inv - full_gy).norm());
  }

  auto stats = [&](std::vector<double>& dev, double rho, double eps) {
    DeviationStats s;
    s.rho = rho;
    s.epsilon = eps;
    std::sort(dev.begin(), dev.end());
    s.max_deviation = dev.back();
    const std::size_t k = static_cast<std::size_t>(std::ceil(0.95 * static_cast<double>(dev.size())));
    s.p95_deviation = dev[std::max<std::size_t>(k, 1) - 1];
    const auto within = std::count_if(dev.begin(), dev.end(), [&](double v) { return v <= eps; });
    s.fraction_within = static_cast<double>(within) / static_cast<double>(dev.size());
    return s;
  };
  ConcentrationReport rep;
  rep.hessian_yy = stats(dev_yy, rho_yy,
                         lemma_epsilon(LemmaKind::kHermitian, rho_yy, batch_size, delta, d1, d2));
  rep.hessian_xy = stats(dev_xy, rho_xy,
                         lemma_epsilon(LemmaKind::kRectangular, rho_xy, batch_size, delta, d1, d2));
  rep.grad_x = stats(dev_x, rho_x, lemma_epsilon(LemmaKind::kVector, rho_x, batch_size, delta));
  rep.grad_y = stats(dev_y, rho_y, lemma_epsilon(LemmaKind::kVector, rho_y, batch_size, delta));
  rep.max_deviation = std::max({rep.hessian_yy.max_deviation, rep.hessian_xy.max_deviation,
                                rep.grad_x.max_deviation, rep.grad_y.max_deviation});
  return rep;
}

}  // namespace hfr::analysis
