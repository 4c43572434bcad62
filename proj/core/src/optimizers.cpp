#include "hfr/optimizers.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <unordered_set>

#include <Eigen/LU>

namespace hfr::opt {

namespace {

struct Tag {
  Algorithm alg;
  const char* name;
};

constexpr Tag kTags[] = {
    {Algorithm::kTtsgda, "ttsgda"}, {Algorithm::kGdaK, "gda_k"}, {Algorithm::kEg, "eg"},
    {Algorithm::kOgda, "ogda"},     {Algorithm::kSga, "sga"},    {Algorithm::kCo, "co"},
    {Algorithm::kFr, "fr"},         {Algorithm::kHessianFr, "hessianfr"},
    {Algorithm::kGdn, "gdn"},
};

void RequireFinite(const Vec& v, const char* what) {
  if (!v.allFinite()) throw NumericalError(std::string("non-finite ") + what);
}

Vec GradX(const MinimaxProblem& f, const PointXY& p, RunState& st) {
  Vec g = f.grad_x(p);
  ++st.counts.grad_x;
  RequireFinite(g, "gradient");
  return g;
}

Vec GradY(const MinimaxProblem& f, const PointXY& p, RunState& st) {
  Vec g = f.grad_y(p);
  ++st.counts.grad_y;
  RequireFinite(g, "gradient");
  return g;
}

// H_yx u, from forward differences of grad_y or from the problem.
Vec ProductYX(const MinimaxProblem& f, const PointXY& p, const Vec& u, const Vec& grad_y_at_p,
              const OptimizerConfig& cfg, RunState& st) {
  ++st.counts.hvp;
  if (cfg.hvp_source == HvpSource::kProblem) return f.hvp_yx(p, u);
  const double alpha = cfg.fd_alpha ? *cfg.fd_alpha : linalg::default_fd_alpha(p, u);
  return linalg::fd_hvp_yx(f, p, u, alpha, grad_y_at_p);
}

HessianBlocks DenseBlocks(const MinimaxProblem& f, const PointXY& p, RunState& st) {
  ++st.counts.hessian;
  if (auto h = f.hessian_blocks(p)) return *h;
  return linalg::fd_hessian_blocks(f, p);
}

Vec SolveFollower(const Mat& hyy, const Vec& rhs) {
  Eigen::FullPivLU<Mat> lu(hyy);
  lu.setThreshold(1e-12);
  if (!lu.isInvertible()) throw NumericalError("follower Hessian singular");
  Vec out = lu.solve(rhs);
  RequireFinite(out, "follower solve");
  return out;
}

Vec SolveSquaredCg(const MinimaxProblem& f, const PointXY& p, const Vec& rhs,
                   const OptimizerConfig& cfg, RunState& st) {
  const auto apply_h = [&](const Vec& v) { return f.hvp_yy(p, v); };
  linalg::CgResult res = linalg::cg_solve_squared(apply_h, rhs, cfg.cg);
  st.counts.hvp += res.operator_applies;
  st.counts.cg_iters += res.iters;
  return std::move(res.solution);
}

void UpdateDg(const MinimaxProblem& f, const PointXY& p, const Vec& grad_y, const OptimizerConfig& cfg,
              RunState& st) {
  if (cfg.dg_fixed_leader && st.dg.prev_y) {
    st.dg.prev_grad_y = GradY(f, PointXY(p.x, *st.dg.prev_y), st);
  }
  st.dg = linalg::dg_update(std::move(st.dg), grad_y, p.y);
}

// x+ = x - eta_x P1 gx;  y+ = y + eta_y1 P2 gy - eta_x H_yy^{-1}(c2 P2 gy - H_yx P1 gx).
PointXY HessianFrUpdate(const MinimaxProblem& f, const PointXY& p, const OptimizerConfig& cfg,
                        double eta_y2, RunState& st) {
  const Vec gx = GradX(f, p, st);
  const Vec gy = GradY(f, p, st);
  auto [px, py] = precondition_apply(st.precond, cfg.adam, gx, gy);
  const double c2 = eta_y2 / cfg.eta_x;

  Vec b;
  switch (cfg.hess_inv) {
    case HessInvMode::kExact: {
      const HessianBlocks h = DenseBlocks(f, p, st);
      Vec r = -(h.hyx * px);
      if (c2 != 0.0) r += c2 * py;
      b = SolveFollower(h.hyy, r);
      break;
    }
    case HessInvMode::kCg: {
      Vec r = -ProductYX(f, p, px, gy, cfg, st);
      if (c2 != 0.0) r += c2 * py;
      b = SolveSquaredCg(f, p, r, cfg, st);
      break;
    }
    case HessInvMode::kDg: {
      Vec r = -ProductYX(f, p, px, gy, cfg, st);
      if (c2 != 0.0) r += c2 * py;
      UpdateDg(f, p, gy, cfg, st);
      b = st.dg.scale * r;
      break;
    }
  }
  PointXY out(p.x - cfg.eta_x * px, p.y + cfg.eta_y1 * py - cfg.eta_x * b);
  RequireFinite(out.stacked(), "iterate");
  return out;
}

}  // namespace

std::string to_string(Algorithm alg) {
  for (const auto& t : kTags)
    if (t.alg == alg) return t.name;
  return "unknown";
}

Algorithm algorithm_from_string(const std::string& tag) {
  for (const auto& t : kTags)
    if (tag == t.name) return t.alg;
  throw ConfigError("unknown algorithm '" + tag + "'");
}

std::string to_string(HessInvMode mode) {
  switch (mode) {
    case HessInvMode::kExact: return "exact";
    case HessInvMode::kCg: return "cg";
    case HessInvMode::kDg: return "dg";
  }
  return "unknown";
}

HessInvMode hess_inv_mode_from_string(const std::string& tag) {
  if (tag == "exact") return HessInvMode::kExact;
  if (tag == "cg") return HessInvMode::kCg;
  if (tag == "dg") return HessInvMode::kDg;
  throw ConfigError("unknown Hessian-inverse mode '" + tag + "'");
}

void OptimizerConfig::validate() const {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(std::string(name) + " must be > 0");
  };
  auto non_negative = [](double v, const char* name) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw ConfigError(std::string(name) + " must be >= 0");
  };
  positive(eta_x, "eta_x");
  switch (algorithm) {
    case Algorithm::kFr:
    case Algorithm::kHessianFr:
      non_negative(eta_y1, "eta_y1");
      non_negative(eta_y2, "eta_y2");
      if (!std::isfinite(c1()) || !std::isfinite(c2()))
        throw ConfigError("step-size ratios must be finite");
      if (algorithm == Algorithm::kHessianFr && !(c1() > 0.0 || c2() > 0.0))
        throw ConfigError("HessianFR needs eta_y1 > 0 or eta_y2 > 0");
      break;
    case Algorithm::kGdn:
      break;
    default:
      positive(eta_y, "eta_y");
  }
  if (algorithm == Algorithm::kGdaK && k_inner < 1) throw ConfigError("k_inner must be >= 1");
  if (algorithm == Algorithm::kSga) non_negative(sga_lambda, "sga_lambda");
  if (algorithm == Algorithm::kCo) non_negative(co_gamma, "co_gamma");
  if (fd_alpha) positive(*fd_alpha, "fd_alpha");
  if (hess_inv == HessInvMode::kCg) cg.validate();
  if (adam) {
    if (!(adam->beta1 >= 0.0 && adam->beta1 < 1.0)) throw ConfigError("adam beta1 must be in [0, 1)");
    if (!(adam->beta2 >= 0.0 && adam->beta2 < 1.0)) throw ConfigError("adam beta2 must be in [0, 1)");
    positive(adam->eps, "adam eps");
    if (algorithm != Algorithm::kTtsgda && algorithm != Algorithm::kFr &&
        algorithm != Algorithm::kHessianFr)
      throw ConfigError("preconditioning is supported for ttsgda, fr and hessianfr only");
  }
}

OpCounts& OpCounts::operator+=(const OpCounts& o) {
  grad_x += o.grad_x;
  grad_y += o.grad_y;
  hvp += o.hvp;
  cg_iters += o.cg_iters;
  hessian += o.hessian;
  return *this;
}

std::pair<Vec, Vec> precondition_apply(PreconditionerState& s, const std::optional<AdamParams>& adam,
                                       const Vec& grad_x, const Vec& grad_y) {
  if (!adam) return {grad_x, grad_y};
  if (s.step == 0) {
    s.m_x = s.v_x = Vec::Zero(grad_x.size());
    s.m_y = s.v_y = Vec::Zero(grad_y.size());
  }
  ++s.step;
  const double b1 = adam->beta1, b2 = adam->beta2;
  const double corr1 = 1.0 - std::pow(b1, static_cast<double>(s.step));
  const double corr2 = 1.0 - std::pow(b2, static_cast<double>(s.step));
  auto update = [&](Vec& m, Vec& v, const Vec& g) -> Vec {
    m = b1 * m + (1.0 - b1) * g;
    v = b2 * v + (1.0 - b2) * g.cwiseProduct(g);
    const Vec m_hat = m / corr1;
    const Vec v_hat = v / corr2;
    return m_hat.array() / (v_hat.array().sqrt() + adam->eps);
  };
  Vec px = update(s.m_x, s.v_x, grad_x);
  Vec py = update(s.m_y, s.v_y, grad_y);
  return {std::move(px), std::move(py)};
}

PointXY step_ttsgda(const MinimaxProblem& f, const PointXY& p, const OptimizerConfig& cfg,
                    RunState& st) {
  const Vec gx = GradX(f, p, st);
  const Vec gy = GradY(f, p, st);
  auto [px, py] = precondition_apply(st.precond, cfg.adam, gx, gy);
  return PointXY(p.x - cfg.eta_x * px, p.y + cfg.eta_y * py);
}

PointXY step_gda_k(const MinimaxProblem& f, const PointXY& p, const OptimizerConfig& cfg,
                   RunState& st) {
  const Vec gx = GradX(f, p, st);
  PointXY inner = p;
  for (int i = 0; i < cfg.k_inner; ++i) inner.y += cfg.eta_y * GradY(f, inner, st);
  return PointXY(p.x - cfg.eta_x * gx, std::move(inner.y));
}

PointXY step_eg(const MinimaxProblem& f, const PointXY& p, const OptimizerConfig& cfg,
                RunState& st) {
  const PointXY half(p.x - cfg.eta_x * GradX(f, p, st), p.y + cfg.eta_y * GradY(f, p, st));
  return PointXY(p.x - cfg.eta_x * GradX(f, half, st), p.y + cfg.eta_y * GradY(f, half, st));
}

PointXY step_ogda(const MinimaxProblem& f, const PointXY& p, const OptimizerConfig& cfg,
                  RunState& st) {
  Vec gx = GradX(f, p, st);
  Vec gy = GradY(f, p, st);
  PointXY out;
  if (st.prev_grad_x && st.prev_grad_y) {
    out = PointXY(p.x - cfg.eta_x * (2.0 * gx - *st.prev_grad_x),
                  p.y + cfg.eta_y * (2.0 * gy - *st.prev_grad_y));
  } else {
    out = PointXY(p.x - cfg.eta_x * gx, p.y + cfg.eta_y * gy);
  }
  st.prev_grad_x = std::move(gx);
  st.prev_grad_y = std::move(gy);
  return out;
}

PointXY step_sga(const MinimaxProblem& f, const PointXY& p, const OptimizerConfig& cfg,
                 RunState& st) {
  const Vec gx = GradX(f, p, st);
  const Vec gy = GradY(f, p, st);
  const Vec hxy_gy = f.hvp_xy(p, gy);
  const Vec hyx_gx = f.hvp_yx(p, gx);
  st.counts.hvp += 2;
  const double lam = cfg.sga_lambda;
  return PointXY(p.x - cfg.eta_x * (gx + lam * hxy_gy), p.y + cfg.eta_y * (gy - lam * hyx_gx));
}

PointXY step_co(const MinimaxProblem& f, const PointXY& p, const OptimizerConfig& cfg,
                RunState& st) {
  if (cfg.co_gamma == 0.0) return step_ttsgda(f, p, cfg, st);
  const Vec gx = GradX(f, p, st);
  const Vec gy = GradY(f, p, st);
  // Gradient of 1/2 ||(grad_x, -grad_y)||^2.
  const Vec reg_x = f.hvp_xx(p, gx) - f.hvp_xy(p, gy);
  const Vec reg_y = f.hvp_yx(p, gx) - f.hvp_yy(p, gy);
  st.counts.hvp += 4;
  const double g = cfg.co_gamma;
  return PointXY(p.x - cfg.eta_x * (gx + g * reg_x), p.y + cfg.eta_y * (gy - g * reg_y));
}

PointXY step_fr(const MinimaxProblem& f, const PointXY& p, const OptimizerConfig& cfg,
                RunState& st) {
  return HessianFrUpdate(f, p, cfg, 0.0, st);
}

PointXY step_hessianfr(const MinimaxProblem& f, const PointXY& p, const OptimizerConfig& cfg,
                       RunState& st) {
  return HessianFrUpdate(f, p, cfg, cfg.eta_y2, st);
}

PointXY step_gdn(const MinimaxProblem& f, const PointXY& p, const OptimizerConfig& cfg,
                 RunState& st) {
  PointXY next(p.x - cfg.eta_x * GradX(f, p, st), p.y);
  const Vec gy = GradY(f, next, st);
  Vec b;
  switch (cfg.hess_inv) {
    case HessInvMode::kExact:
      b = SolveFollower(DenseBlocks(f, next, st).hyy, gy);
      break;
    case HessInvMode::kCg:
      b = SolveSquaredCg(f, next, gy, cfg, st);
      break;
    case HessInvMode::kDg:
      UpdateDg(f, next, gy, cfg, st);
      b = st.dg.scale * gy;
      break;
  }
  next.y -= b;
  RequireFinite(next.stacked(), "iterate");
  return next;
}

PointXY step(const MinimaxProblem& f, const PointXY& p, const OptimizerConfig& cfg, RunState& st) {
  switch (cfg.algorithm) {
    case Algorithm::kTtsgda: return step_ttsgda(f, p, cfg, st);
    case Algorithm::kGdaK: return step_gda_k(f, p, cfg, st);
    case Algorithm::kEg: return step_eg(f, p, cfg, st);
    case Algorithm::kOgda: return step_ogda(f, p, cfg, st);
    case Algorithm::kSga: return step_sga(f, p, cfg, st);
    case Algorithm::kCo: return step_co(f, p, cfg, st);
    case Algorithm::kFr: return step_fr(f, p, cfg, st);
    case Algorithm::kHessianFr: return step_hessianfr(f, p, cfg, st);
    case Algorithm::kGdn: return step_gdn(f, p, cfg, st);
  }
  throw ConfigError("unknown algorithm");
}

MinibatchSampler::MinibatchSampler(std::size_t n, std::size_t batch, std::uint64_t seed)
    : n_(n), batch_(batch), rng_(seed) {
  if (batch < 1) throw ConfigError("batch size must be >= 1");
  if (batch > n) throw ConfigError("batch size exceeds the number of components");
}

std::vector<std::size_t> MinibatchSampler::next() {
  std::vector<std::size_t> out;
  if (batch_ == n_) {
    out = all_indices(n_);
    return out;
  }
  // Floyd's algorithm: exactly `batch_` draws, no rejection loop.
  std::unordered_set<std::size_t> chosen;
  chosen.reserve(batch_ * 2);
  for (std::size_t j = n_ - batch_; j < n_; ++j) {
    std::uniform_int_distribution<std::size_t> pick(0, j);
    const std::size_t t = pick(rng_);
    if (!chosen.insert(t).second) chosen.insert(j);
  }
  out.assign(chosen.begin(), chosen.end());
  std::sort(out.begin(), out.end());
  return out;
}

PointXY step_stochastic(const FiniteSumProblem& fs, std::span<const std::size_t> batch,
                        const PointXY& p, const OptimizerConfig& cfg, RunState& st) {
  const auto view = fs.batch_view(batch);
  return step(*view, p, cfg, st);
}

void StopCriteria::validate() const {
  if (max_iters < 1) throw ConfigError("max_iters must be >= 1");
  if (record_stride < 1) throw ConfigError("record stride must be >= 1");
  if (!(grad_tol >= 0.0)) throw ConfigError("grad_tol must be >= 0");
  if (!(divergence_norm > 0.0)) throw ConfigError("divergence norm must be > 0");
}

namespace {

using Clock = std::chrono::steady_clock;

template <typename StepFn>
RunResult RunLoop(const MinimaxProblem& monitor, const PointXY& initial, const OptimizerConfig& cfg,
                  const StopCriteria& stop, StepFn step_fn) {
  cfg.validate();
  stop.validate();
  initial.validate();
  if (initial.dim_x() != monitor.dim_x() || initial.dim_y() != monitor.dim_y())
    throw ConfigError("initial point does not match the problem dimensions");

  RunResult res;
  RunState st;
  const auto t0 = Clock::now();
  auto elapsed = [&] { return std::chrono::duration<double>(Clock::now() - t0).count(); };

  PointXY z = initial;
  long t = 0;
  long last_recorded = -1;
  // Returns true when the run has converged.
  auto record = [&]() -> bool {
    TrajectoryRecord rec;
    rec.step = t;
    rec.point = z;
    rec.grad_norm_x = monitor.grad_x(z).norm();
    rec.grad_norm_y = monitor.grad_y(z).norm();
    rec.wall_time = elapsed();
    const bool done = rec.max_grad_norm() <= stop.grad_tol;
    res.trajectory.append(std::move(rec));
    last_recorded = t;
    return done;
  };

  if (record()) {
    res.converged = true;
  } else {
    while (t < stop.max_iters) {
      try {
        z = step_fn(z, st);
      } catch (const Error& e) {
        res.error_kind = e.kind();
        res.error_message = e.what();
        break;
      }
      ++t;
      const double norm = std::sqrt(z.x.squaredNorm() + z.y.squaredNorm());
      if (!std::isfinite(norm) || norm > stop.divergence_norm) {
        res.diverged = true;
        if (z.finite()) record();
        break;
      }
      if (t % stop.record_stride == 0 || t == stop.max_iters) {
        if (record()) {
          res.converged = true;
          break;
        }
      }
    }
    if (last_recorded != t && z.finite() && !res.converged) record();
  }
  res.final_point = z;
  res.iterations = t;
  res.counts = st.counts;
  res.wall_time = elapsed();
  return res;
}

}  // namespace

RunResult run(const MinimaxProblem& f, const PointXY& initial, const OptimizerConfig& cfg,
              const StopCriteria& stop) {
  return RunLoop(f, initial, cfg, stop,
                 [&](const PointXY& z, RunState& st) { return step(f, z, cfg, st); });
}

RunResult run_stochastic(const FiniteSumProblem& fs, const PointXY& initial,
                         const OptimizerConfig& cfg, const StopCriteria& stop,
                         const StochasticOptions& sopt) {
  MinibatchSampler sampler(fs.size(), sopt.batch_size, sopt.seed);
  return RunLoop(fs.full(), initial, cfg, stop, [&](const PointXY& z, RunState& st) {
    const auto batch = sampler.next();
    return step_stochastic(fs, batch, z, cfg, st);
  });
}

}  // namespace hfr::opt
