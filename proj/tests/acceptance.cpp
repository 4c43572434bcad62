// One PASS/FAIL line per acceptance criterion. Exit status is non-zero when any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "experiment.hpp"
#include "hfr/analysis.hpp"
#include "hfr/linalg.hpp"
#include "hfr/optimizers.hpp"
#include "hfr/problem.hpp"
#include "hfr/problems.hpp"

namespace {

using namespace hfr;
using opt::Algorithm;
using opt::HessInvMode;
using opt::OptimizerConfig;

struct Outcome {
  bool pass = true;
  std::vector<std::string> notes;

  void check(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      notes.push_back("FAILED " + what);
    }
  }
  void note(const std::string& s) { notes.push_back(s); }
};

std::string Fmt(const char* fmt, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, fmt, args...);
  return buf;
}

OptimizerConfig Config(Algorithm alg, double eta_x, double eta_y, double eta_y2 = 0.0) {
  OptimizerConfig c;
  c.algorithm = alg;
  c.eta_x = eta_x;
  c.eta_y = eta_y;
  c.eta_y1 = eta_y;
  c.eta_y2 = eta_y2;
  c.hess_inv = HessInvMode::kExact;
  return c;
}

opt::StopCriteria Stop(long iters, double grad_tol = 0.0, long stride = 1) {
  opt::StopCriteria s;
  s.max_iters = iters;
  s.grad_tol = grad_tol;
  s.record_stride = stride;
  return s;
}

double Norm(const PointXY& p) { return p.stacked().norm(); }

bool SameTrajectory(const opt::RunResult& a, const opt::RunResult& b) {
  const auto& ra = a.trajectory.records();
  const auto& rb = b.trajectory.records();
  if (ra.size() != rb.size()) return false;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    if (ra[i].step != rb[i].step) return false;
    if (ra[i].point.x != rb[i].point.x || ra[i].point.y != rb[i].point.y) return false;
  }
  return true;
}

double MaxRelDiff(const opt::RunResult& a, const opt::RunResult& b) {
  const auto& ra = a.trajectory.records();
  const auto& rb = b.trajectory.records();
  if (ra.size() != rb.size()) return std::numeric_limits<double>::infinity();
  double worst = 0.0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    const Vec za = ra[i].point.stacked(), zb = rb[i].point.stacked();
    worst = std::max(worst, (za - zb).norm() / std::max(1e-300, zb.norm()));
  }
  return worst;
}

double LminSym(const Mat& a) { return linalg::eigvals_sym(a).minCoeff(); }
double LmaxSym(const Mat& a) { return linalg::eigvals_sym(a).maxCoeff(); }

std::vector<std::shared_ptr<problems::QuadraticGame>> RandomGames(int n, std::uint64_t base) {
  std::vector<std::shared_ptr<problems::QuadraticGame>> out;
  for (int i = 0; i < n; ++i)
    out.push_back(problems::make_random_strict_minimax(3, 3, base + static_cast<std::uint64_t>(i)));
  return out;
}

// ---------------------------------------------------------------------------

Outcome ToyVerdicts() {
  Outcome o;
  const double eta = 0.05;
  const std::vector<std::string> ridge = {"hessianfr", "fr", "gdn"};
  const std::vector<std::string> gda_family = {"ttsgda", "ogda", "eg", "sga", "co"};

  auto cfg_for = [&](const std::string& tag) {
    OptimizerConfig c = Config(opt::algorithm_from_string(tag), eta, eta);
    if (tag == "hessianfr") c.eta_y2 = eta;
    return c;
  };
  struct Case {
    const char* name;
    std::shared_ptr<MinimaxProblem> f;
  };
  const std::vector<Case> cases = {
      {"g1", problems::make_g1()}, {"g2", problems::make_g2()}, {"g3", problems::make_g3()}};

  for (const auto& [name, f] : cases) {
    const std::string g = name;
    std::vector<std::string> algs = ridge;
    if (g == "g1") {
      algs.insert(algs.end(), {"ttsgda", "ogda", "eg"});
    } else {
      algs.insert(algs.end(), gda_family.begin(), gda_family.end());
    }
    for (const auto& tag : algs) {
      const bool is_ridge = std::find(ridge.begin(), ridge.end(), tag) != ridge.end();
      int ok = 0;
      double worst = 0.0;
      for (int k = 0; k < 8; ++k) {
        const double th = 2.0 * std::numbers::pi * k / 8.0;
        const PointXY z0(Vec::Constant(1, 0.5 * std::cos(th)), Vec::Constant(1, 0.5 * std::sin(th)));
        auto stop = Stop(20000, 0.0, 100);
        stop.divergence_norm = 1e6;
        const auto r = opt::run(*f, z0, cfg_for(tag), stop);
        const double n = Norm(r.final_point);
        bool good = false;
        if (g == "g1") {
          good = is_ridge ? n < 1e-6 : n > 5.0;
        } else if (g == "g2") {
          good = is_ridge ? n > 0.5 : n < 1e-6;
        } else {
          double peak = 0.0;
          for (const auto& rec : r.trajectory.records()) peak = std::max(peak, Norm(rec.point));
          const double gn = std::max(f->grad_x(r.final_point).norm(), f->grad_y(r.final_point).norm());
          good = is_ridge ? n < 1e-4 : (gn > 1e-3 && peak <= 10.0 && n >= 1e-4);
        }
        ok += good;
        worst = std::max(worst, n);
      }
      o.check(ok == 8, Fmt("%s %s: %d/8 starts as expected", name, tag.c_str(), ok));
    }
  }
  o.note("g1: ridge methods -> 0, ttsgda/ogda/eg diverge; g2: gda family -> 0, ridge methods escape;"
         " g3: ridge methods -> 0, gda family cycles (eta = 0.05, 8 starts each)");
  return o;
}

// Asymptotic contraction of ||z|| over the last window before underflow.
double MeasuredRate(const MinimaxProblem& f, const OptimizerConfig& c, const PointXY& z0) {
  auto stop = Stop(6000);
  stop.divergence_norm = 1e12;
  const auto r = opt::run(f, z0, c, stop);
  const auto& recs = r.trajectory.records();
  std::size_t end = recs.size() - 1;
  while (end > 0 && Norm(recs[end].point) < 1e-250) --end;
  const std::size_t window = std::min<std::size_t>(200, end / 2);
  if (window == 0) return 0.0;
  const double a = Norm(recs[end - window].point), b = Norm(recs[end].point);
  return std::pow(b / a, 1.0 / static_cast<double>(window));
}

Outcome SpectralRates() {
  Outcome o;
  const auto games = RandomGames(20, 1000);
  const PointXY z0(Vec::Ones(3), Vec::Constant(3, -1.0));
  double worst[3] = {0, 0, 0};
  for (const auto& q : games) {
    const HessianBlocks h = q->blocks();
    const double c1 = 1.0, c2 = 0.5;

    const double eta_h = 0.5 * analysis::rate_bounds(h, c1, c2).eta_x_max_hfr;
    const double rho_h = analysis::jacobian_hessianfr(h, eta_h, c1, c2).spectral_radius;
    const double m_h = MeasuredRate(*q, Config(Algorithm::kHessianFr, eta_h, c1 * eta_h, c2 * eta_h), z0);

    const double eta_f = 0.5 * analysis::rate_bounds(h, c1, 0.0).eta_x_max_hfr;
    const double rho_f = analysis::jacobian_fr(h, eta_f, c1).spectral_radius;
    const double m_f = MeasuredRate(*q, Config(Algorithm::kFr, eta_f, c1 * eta_f), z0);

    const double eta_g = 1.0 / LmaxSym(analysis::schur_complement(h));
    const double rho_g = analysis::jacobian_gdn(h, eta_g).spectral_radius;
    const double m_g = MeasuredRate(*q, Config(Algorithm::kGdn, eta_g, 0.0), z0);

    const double rel[3] = {std::abs(m_h - rho_h) / rho_h, std::abs(m_f - rho_f) / rho_f,
                           std::abs(m_g - rho_g) / rho_g};
    for (int k = 0; k < 3; ++k) worst[k] = std::max(worst[k], rel[k]);
  }
  o.check(worst[0] <= 0.05, "hessianfr rate within 5%");
  o.check(worst[1] <= 0.05, "fr rate within 5%");
  o.check(worst[2] <= 0.05, "gdn rate within 5%");
  o.note(Fmt("20 games, worst relative gap: hessianfr %.2e, fr %.2e, gdn %.2e", worst[0], worst[1],
             worst[2]));
  return o;
}

Outcome StabilitySweep() {
  Outcome o;
  const auto games = RandomGames(20, 1000);
  const PointXY z0(Vec::Ones(3), Vec::Constant(3, -1.0));
  const double c1 = 1.0, c2 = 0.5;
  int stable = 0, converged = 0, unstable = 0, grew = 0;
  for (const auto& q : games) {
    const HessianBlocks h = q->blocks();
    const double bound = analysis::rate_bounds(h, c1, c2).eta_x_max_hfr;
    for (double s : {0.5, 0.99}) {
      const double eta = s * bound;
      stable += analysis::jacobian_hessianfr(h, eta, c1, c2).spectral_radius < 1.0;
      const auto r = opt::run(*q, z0, Config(Algorithm::kHessianFr, eta, c1 * eta, c2 * eta),
                              Stop(200000, 1e-8, 1000));
      converged += r.converged;
    }
    const double eta = 1.1 * bound;
    const auto rep = analysis::jacobian_hessianfr(h, eta, c1, c2);
    unstable += rep.spectral_radius >= 1.0;

    // Start along the eigenvector of the largest-modulus eigenvalue of J.
    Eigen::EigenSolver<Mat> es(rep.jacobian);
    Index arg = 0;
    es.eigenvalues().cwiseAbs().maxCoeff(&arg);
    Vec v = es.eigenvectors().col(arg).real();
    if (v.norm() == 0.0) v = es.eigenvectors().col(arg).imag();
    v /= v.norm();
    auto stop = Stop(200, 0.0, 200);
    stop.divergence_norm = 1e300;
    const auto r = opt::run(*q, PointXY::FromStacked(1e-3 * v, 3),
                            Config(Algorithm::kHessianFr, eta, c1 * eta, c2 * eta), stop);
    grew += Norm(r.final_point) > 1e-3;
  }
  o.check(stable == 40, Fmt("rho < 1 at 0.5x and 0.99x: %d/40", stable));
  o.check(converged == 40, Fmt("empirical convergence at 0.5x and 0.99x: %d/40", converged));
  o.check(unstable == 20, Fmt("rho >= 1 at 1.1x: %d/20", unstable));
  o.check(grew == 20, Fmt("growth along the dominant eigenvector at 1.1x: %d/20", grew));
  o.note(Fmt("c1 = %.1f, c2 = %.1f; stable %d/40, converged %d/40, unstable %d/20, growth %d/20", c1,
             c2, stable, converged, unstable, grew));
  return o;
}

Outcome KappaOrdering() {
  Outcome o;
  const Mat schur = Mat::Identity(2, 2);
  Mat hyy = Mat::Zero(2, 2);
  hyy.diagonal() << -1.0, -100.0;
  const Mat hxy = Mat::Identity(2, 2);
  const auto q = problems::make_quadratic_from_schur(schur, hxy, hyy);
  const HessianBlocks h = q->blocks();

  const auto rb_h = analysis::rate_bounds(h, 0.0, 1.0);
  const auto rb_f = analysis::rate_bounds(h, 1.0, 0.0);
  o.check(std::abs(rb_h.kappa_hfr - 1.0) <= 1e-12, Fmt("kappa_hfr(0, 1) = %.6g", rb_h.kappa_hfr));
  o.check(std::abs(rb_f.kappa_hfr - 0.01) <= 1e-12, Fmt("kappa_fr(1) = %.6g", rb_f.kappa_hfr));
  o.check(rb_h.kappa_hfr > rb_f.kappa_hfr, "kappa_hfr > kappa_fr");

  const PointXY z0(Vec::Ones(2), Vec::Ones(2));
  const double eta_h = 0.5 * rb_h.eta_x_max_hfr;
  const double eta_f = 0.5 * rb_f.eta_x_max_hfr;
  const auto rh = opt::run(*q, z0, Config(Algorithm::kHessianFr, eta_h, 0.0, eta_h), Stop(100000, 1e-8));
  const auto rf = opt::run(*q, z0, Config(Algorithm::kFr, eta_f, eta_f), Stop(100000, 1e-8));
  o.check(rh.converged && rf.converged, "both reach 1e-8");
  o.check(rf.iterations >= 10 * rh.iterations,
          Fmt("iterations hessianfr %ld vs fr %ld", rh.iterations, rf.iterations));
  o.note(Fmt("kappa %.3g vs %.3g; iterations to 1e-8 at 0.5x bound: hessianfr %ld, fr %ld",
             rb_h.kappa_hfr, rb_f.kappa_hfr, rh.iterations, rf.iterations));
  return o;
}

Outcome ReductionIdentities() {
  Outcome o;
  const auto games = RandomGames(20, 2000);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  int fr_same = 0, fr_total = 0, gdn_same = 0;
  double gdn_gap = 0.0;
  for (const auto& q : games) {
    Vec z(6);
    for (Index i = 0; i < 6; ++i) z[i] = u(rng);
    const PointXY z0 = PointXY::FromStacked(z, 3);
    const HessianBlocks h = q->blocks();
    const double eta = 0.5 * analysis::rate_bounds(h, 1.0, 0.0).eta_x_max_hfr;
    for (auto mode : {HessInvMode::kExact, HessInvMode::kCg, HessInvMode::kDg}) {
      auto a = Config(Algorithm::kHessianFr, eta, eta, 0.0);
      auto b = Config(Algorithm::kFr, eta, eta);
      a.hess_inv = b.hess_inv = mode;
      fr_same += SameTrajectory(opt::run(*q, z0, a, Stop(300)), opt::run(*q, z0, b, Stop(300)));
      ++fr_total;
    }
    const double eta_g = 1.0 / LmaxSym(analysis::schur_complement(h));
    const auto rg = opt::run(*q, z0, Config(Algorithm::kGdn, eta_g, 0.0), Stop(300));
    const auto rh = opt::run(*q, z0, Config(Algorithm::kHessianFr, eta_g, 0.0, 1.0), Stop(300));
    gdn_same += SameTrajectory(rg, rh);
    gdn_gap = std::max(gdn_gap, MaxRelDiff(rg, rh));
  }

  problems::FiniteSumQuadraticOptions fo;
  fo.n = 32;
  fo.d1 = 3;
  fo.d2 = 3;
  fo.seed = 9;
  const auto fs = problems::make_finite_sum_quadratic(fo);
  const PointXY z0(Vec::Constant(3, 0.5), Vec::Constant(3, -0.5));
  int sto_same = 0;
  for (auto mode : {HessInvMode::kExact, HessInvMode::kCg, HessInvMode::kDg}) {
    auto c = Config(Algorithm::kHessianFr, 0.05, 0.05, 0.02);
    c.hess_inv = mode;
    opt::StochasticOptions so;
    so.batch_size = fs->size();
    so.seed = 3;
    sto_same += SameTrajectory(opt::run_stochastic(*fs, z0, c, Stop(500), so),
                               opt::run(fs->full(), z0, c, Stop(500)));
  }

  o.check(fr_same == fr_total, Fmt("hessianfr(eta_y2 = 0) == fr bitwise: %d/%d", fr_same, fr_total));
  o.check(gdn_same == 20, Fmt("hessianfr(0, 1, exact) == gdn bitwise: %d/20", gdn_same));
  o.check(sto_same == 3, Fmt("full-batch stochastic == deterministic bitwise: %d/3", sto_same));
  o.note(Fmt("gdn vs hessianfr(0, 1) max relative trajectory gap %.2e (GDN evaluates the follower"
             " gradient at x+, HessianFR linearizes it at x; equal in exact arithmetic only)",
             gdn_gap));
  return o;
}

Outcome EgVersusGda() {
  Outcome o;
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> eig(0.01, 0.99);
  std::normal_distribution<double> g;
  int ok = 0;
  double min_gap = std::numeric_limits<double>::infinity();
  for (int t = 0; t < 50; ++t) {
    const Index n = 2 + t % 5;
    Mat s(n, n);
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < n; ++j) s(i, j) = g(rng);
    s += 3.0 * Mat::Identity(n, n);
    Vec d(n);
    for (Index i = 0; i < n; ++i) d[i] = eig(rng);
    const Mat u = s * d.asDiagonal() * s.inverse();
    const double r_eg = analysis::jacobian_eg_u(u, 1.0).spectral_radius;
    const double r_gda = analysis::jacobian_ttsgda_u(u, 1.0).spectral_radius;
    ok += r_eg >= r_gda;
    min_gap = std::min(min_gap, r_eg - r_gda);
  }
  o.check(ok == 50, Fmt("rho(I - U + U^2) >= rho(I - U): %d/50", ok));
  o.note(Fmt("50 random U with real spectra in (0, 1); smallest margin %.3e", min_gap));
  return o;
}

Outcome Hoeffding() {
  Outcome o;
  using analysis::LemmaKind;
  auto in = [](double rx, double ry, double rxy, double ryy, double eps, double delta, long d1,
               long d2, long t) {
    analysis::SampleSizeInputs s;
    s.rho_x = rx;
    s.rho_y = ry;
    s.rho_xy = rxy;
    s.rho_yy = ryy;
    s.epsilon = eps;
    s.delta = delta;
    s.d1 = d1;
    s.d2 = d2;
    s.horizon = t;
    return s;
  };
  // Expected integers evaluated independently at 50 significant digits.
  struct SampleCase {
    analysis::SampleSizeInputs in;
    long expected;
  };
  const std::vector<SampleCase> sample = {
      {in(1, 1, 1, 1, 0.5, 0.05, 10, 10, 100), 1183},
      {in(2, 0.5, 1.5, 3, 0.25, 0.1, 3, 5, 1000), 29720},
      {in(0.3, 0.4, 1, 0.7, 0.9, 0.01, 1, 1, 10), 178},
      {in(5, 5, 5, 5, 1, 0.5, 50, 20, 10000), 9232},
      {in(1, 2, 3, 4, 2, 0.2, 4, 4, 1), 325},
  };
  int sample_ok = 0;
  for (const auto& c : sample) sample_ok += analysis::sample_size_bound(c.in) == c.expected;
  o.check(sample_ok == 5, Fmt("sample_size_bound: %d/5", sample_ok));

  struct LemmaCase {
    LemmaKind kind;
    double rho, eps, delta;
    long d1, d2, expected;
  };
  const std::vector<LemmaCase> lemma = {
      {LemmaKind::kHermitian, 1.5, 0.2, 0.05, 1, 4, 4568},
      {LemmaKind::kHermitian, 0.7, 0.05, 0.01, 1, 30, 27282},
      {LemmaKind::kRectangular, 2, 0.5, 0.1, 3, 5, 1122},
      {LemmaKind::kRectangular, 1, 0.3, 0.02, 10, 10, 1229},
      {LemmaKind::kVector, 3, 0.4, 0.05, 1, 1, 5843},
      {LemmaKind::kVector, 0.5, 0.01, 0.001, 1, 1, 572621},
  };
  int lemma_ok = 0;
  for (const auto& c : lemma)
    lemma_ok += analysis::lemma_bound(c.kind, c.rho, c.eps, c.delta, c.d1, c.d2) == c.expected;
  o.check(lemma_ok == 6, Fmt("lemma bounds: %d/6", lemma_ok));

  problems::FiniteSumQuadraticOptions fo;
  fo.n = 200;
  fo.d1 = 2;
  fo.d2 = 4;
  fo.seed = 3;
  const auto fs = problems::make_finite_sum_quadratic(fo);
  const PointXY p(Vec::Constant(2, 0.5), Vec::Constant(4, -0.5));
  const auto rep = analysis::empirical_concentration_check(*fs, p, 100, 1000, 17, 0.05);
  const char* names[] = {"hessian_yy", "hessian_xy", "grad_x", "grad_y"};
  const analysis::DeviationStats* stats[] = {&rep.hessian_yy, &rep.hessian_xy, &rep.grad_x,
                                             &rep.grad_y};
  std::string fr;
  for (int k = 0; k < 4; ++k) {
    o.check(stats[k]->fraction_within >= 0.95,
            Fmt("%s: %.3f of trials within eps", names[k], stats[k]->fraction_within));
    fr += Fmt(" %s %.3f", names[k], stats[k]->fraction_within);
  }
  o.note("fraction of 1000 trials within the implied eps (n = 200, batch 100):" + fr);
  return o;
}

Outcome MixtureGan(const std::string& config_path) {
  Outcome o;
  auto cfg = cli::load_config(config_path);
  const auto tmp = std::filesystem::temp_directory_path() / "hfr_acceptance_gan";
  cfg.output_dir = tmp.string();
  cfg.record_wall_time = false;
  const auto summary = cli::run_experiment(cfg);
  std::filesystem::remove_all(tmp);

  auto final_max = [&](const std::string& name) {
    for (const auto& a : summary.outcomes)
      if (a.name == name)
        return a.result.error_kind ? std::numeric_limits<double>::infinity()
                                   : a.result.trajectory.back().max_grad_norm();
    return std::numeric_limits<double>::quiet_NaN();
  };
  const double cg5 = final_max("hessianfr_cg5"), dg = final_max("hessianfr_dg"),
               fr = final_max("fr_cg5"), gda = final_max("ttsgda");
  o.check(cg5 <= dg && cg5 <= fr && cg5 <= gda, "hessianfr_cg5 has the lowest final gradient norm");
  for (const auto& [name, v] : {std::pair{"hessianfr_cg5", cg5}, {"hessianfr_dg", dg}, {"fr_cg5", fr}})
    o.check(2.0 * v <= gda, Fmt("%s beats ttsgda by 2x", name));
  o.note(Fmt("final max grad norm: hessianfr_cg5 %.3e, hessianfr_dg %.3e, fr_cg5 %.3e, ttsgda %.3e",
             cg5, dg, fr, gda));
  return o;
}

Outcome Hygiene() {
  Outcome o;
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  auto random_point = [&](Index d1, Index d2) {
    Vec z(d1 + d2);
    for (Index i = 0; i < z.size(); ++i) z[i] = u(rng);
    return PointXY::FromStacked(z, d1);
  };

  // Gradient checks.
  std::vector<std::shared_ptr<const MinimaxProblem>> probs = {
      problems::make_g1(), problems::make_g2(), problems::make_g3(),
      problems::make_random_strict_minimax(3, 4, 1)};
  problems::FiniteSumQuadraticOptions fo;
  fo.n = 20;
  const auto fs = problems::make_finite_sum_quadratic(fo);
  problems::MixtureGanOptions go;
  go.n_data = 32;
  go.m_noise = 32;
  const auto gan = problems::make_mixture_gan(go);
  double worst_grad = 0.0;
  for (const auto& f : probs)
    for (int k = 0; k < 10; ++k)
      worst_grad = std::max(worst_grad,
                            grad_check(*f, random_point(f->dim_x(), f->dim_y())).max_rel_error);
  for (int k = 0; k < 10; ++k)
    worst_grad = std::max(worst_grad, grad_check(fs->full(), random_point(2, 2)).max_rel_error);
  for (std::uint64_t s = 0; s < 5; ++s)
    worst_grad = std::max(worst_grad, grad_check(gan->full(), gan->initial_point(s)).max_rel_error);
  o.check(worst_grad <= 1e-5, Fmt("grad_check worst %.2e", worst_grad));

  // CG on SPD systems.
  std::normal_distribution<double> g;
  double worst_cg = 0.0;
  for (Index n = 1; n <= 16; ++n) {
    for (int rep = 0; rep < 5; ++rep) {
      Mat q(n, n);
      for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < n; ++j) q(i, j) = g(rng);
      const Mat basis = Eigen::HouseholderQR<Mat>(q).householderQ();
      Vec d(n), b(n);
      for (Index i = 0; i < n; ++i) {
        d[i] = 0.5 + 4.5 * std::abs(u(rng)) / 1.5;
        b[i] = g(rng);
      }
      const Mat a = basis * d.asDiagonal() * basis.transpose();
      linalg::CgParams p;
      p.max_iters = static_cast<int>(n);
      const auto res = linalg::cg_solve_spd([&](const Vec& v) { return Vec(a * v); }, b, p);
      worst_cg = std::max(worst_cg, (a * res.solution - b).norm() / b.norm());
    }
  }
  o.check(worst_cg <= 1e-10, Fmt("CG relative residual worst %.2e", worst_cg));

  // FD Hessian-vector products on quadratics, default step.
  double worst_hvp = 0.0;
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto q = problems::make_random_strict_minimax(3, 4, 50 + s);
    const PointXY p = random_point(3, 4);
    const Vec exact = q->blocks().hyx * q->grad_x(p);
    const Vec gx = q->grad_x(p);
    const Vec fd = linalg::fd_hvp_yx(*q, p, gx, linalg::default_fd_alpha(p, gx));
    worst_hvp = std::max(worst_hvp, (fd - exact).norm() / std::max(1e-300, exact.norm()));
  }
  o.check(worst_hvp <= 1e-9, Fmt("FD HVP relative error worst %.2e", worst_hvp));

  // Diagonal estimate on scalar quadratics f = h y^2 / 2 recovers 1 / h.
  double worst_dg = 0.0;
  for (double h : {-1.0, -2.0, -0.25, -3.7, -11.0, 0.6}) {
    linalg::DgState st;
    const Vec y0 = Vec::Constant(1, 1.3), y1 = Vec::Constant(1, 0.4);
    st = linalg::dg_update(st, h * y0, y0);
    st = linalg::dg_update(st, h * y1, y1);
    worst_dg = std::max(worst_dg, std::abs(st.scale * h - 1.0));
  }
  linalg::DgState st;
  st = linalg::dg_update(st, Vec::Constant(1, -2.0), Vec::Constant(1, 1.0));
  st = linalg::dg_update(st, Vec::Constant(1, -1.0), Vec::Constant(1, 0.5));
  o.check(st.scale == -0.5, "dg_update on -y^2 gives -0.5 exactly");
  o.check(worst_dg <= 4.0 * std::numeric_limits<double>::epsilon(),
          Fmt("dg_update relative error worst %.2e", worst_dg));
  o.note(Fmt("grad %.1e, cg %.1e, hvp %.1e, dg %.1e", worst_grad, worst_cg, worst_hvp, worst_dg));
  return o;
}

Outcome CostAccounting(const std::string& config_dir) {
  Outcome o;
  cli::ExperimentConfig cfg;
  cfg.problem = {{"type", "random_quadratic"}, {"d1", 8}, {"d2", 16}};
  cfg.initial.center = Vec::Zero(24);
  cfg.initial.radius = 1.0;
  for (int k : {1, 5, 10}) {
    cli::AlgorithmSpec s;
    s.name = "hessianfr_cg" + std::to_string(k);
    s.config = Config(Algorithm::kHessianFr, 0.01, 0.01, 0.005);
    s.config.hess_inv = HessInvMode::kCg;
    s.config.cg.max_iters = k;
    s.config.cg.residual_tol = 1e-300;
    cfg.algorithms.push_back(s);
  }
  cli::AlgorithmSpec eg;
  eg.name = "eg";
  eg.config = Config(Algorithm::kEg, 0.01, 0.01);
  cfg.algorithms.push_back(eg);
  const auto rows = cli::bench(cfg, 100);
  int ok = 0;
  std::string summary;
  for (std::size_t i = 0; i < 3; ++i) {
    const int k = i == 0 ? 1 : i == 1 ? 5 : 10;
    ok += rows[i].hvp_per_step == 1.0 + 2.0 * k;
    summary += Fmt(" cg%d %.0f hvp;", k, rows[i].hvp_per_step);
  }
  ok += rows[3].grad_evals_per_step == 4.0;
  summary += Fmt(" eg %.0f grads", rows[3].grad_evals_per_step);
  o.check(ok == 4, "per-step operation counts");

  // The same counts through a shipped config.
  const auto shipped = cli::bench(cli::load_config(config_dir + "/g1_compare.toml"), 20);
  for (const auto& r : shipped)
    if (r.name == "eg") o.check(r.grad_evals_per_step == 4.0, "eg on g1 uses 4 gradients per step");
  o.note("bench:" + summary);
  return o;
}

}  // namespace

int main() {
  const std::string configs = HFR_CONFIG_DIR;
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"toy verdict matrix", ToyVerdicts},
      {"spectral-rate agreement", SpectralRates},
      {"stability sweep", StabilitySweep},
      {"kappa ordering and acceleration", KappaOrdering},
      {"reduction identities", ReductionIdentities},
      {"EG vs TTSGDA", EgVersusGda},
      {"Hoeffding bounds", Hoeffding},
      {"mixture-GAN ordering", [&] { return MixtureGan(configs + "/gan_mixture.toml"); }},
      {"numerical hygiene", Hygiene},
      {"cost accounting", [&] { return CostAccounting(configs); }},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = criteria[i].second();
    } catch (const std::exception& e) {
      out.pass = false;
      out.notes.push_back(std::string("exception: ") + e.what());
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("criterion %2zu %-34s %s  (%.1fs)\n", i + 1, criteria[i].first.c_str(),
                out.pass ? "PASS" : "FAIL", secs);
    for (const auto& n : out.notes) std::printf("      %s\n", n.c_str());
    std::fflush(stdout);
    failed += !out.pass;
  }
  std::printf("%zu/%zu criteria passed\n", criteria.size() - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
