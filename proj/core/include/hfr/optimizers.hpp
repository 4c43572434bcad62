#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "hfr/linalg.hpp"
#include "hfr/problem.hpp"
#include "hfr/trajectory.hpp"

namespace hfr::opt {

enum class Algorithm { kTtsgda, kGdaK, kEg, kOgda, kSga, kCo, kFr, kHessianFr, kGdn };

std::string to_string(Algorithm alg);
/// Accepts the lower-case tags printed by to_string ("ttsgda", "gda_k", ...).
Algorithm algorithm_from_string(const std::string& tag);

/// How H_yy^{-1} is applied in FR / HessianFR / GDN.
enum class HessInvMode { kExact, kCg, kDg };

std::string to_string(HessInvMode mode);
HessInvMode hess_inv_mode_from_string(const std::string& tag);

/// Source of the H_yx product: the forward-difference formula on grad_y, or
/// the problem's own hvp_yx.
enum class HvpSource { kFiniteDifference, kProblem };

struct AdamParams {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct OptimizerConfig {
  Algorithm algorithm = Algorithm::kHessianFr;
  double eta_x = 0.01;
  double eta_y1 = 0.01;  // follower gradient rate of FR / HessianFR
  double eta_y2 = 0.0;   // Newton-like rate of HessianFR
  double eta_y = 0.01;   // follower rate of the GDA family, EG, OGDA, SGA, CO
  std::optional<double> fd_alpha;  // unset: linalg::default_fd_alpha
  HessInvMode hess_inv = HessInvMode::kExact;
  linalg::CgParams cg;
  std::optional<AdamParams> adam;  // unset: no preconditioning
  int k_inner = 1;
  double sga_lambda = 1.0;
  double co_gamma = 0.1;
  HvpSource hvp_source = HvpSource::kFiniteDifference;
  // DG: re-evaluate the previous follower gradient at the current leader
  // (one extra grad_y per step) instead of reusing the stored one.
  bool dg_fixed_leader = false;

  double c1() const { return eta_y1 / eta_x; }
  double c2() const { return eta_y2 / eta_x; }

  void validate() const;
};

/// Abstract operation counts accumulated by the steppers.
struct OpCounts {
  long grad_x = 0;
  long grad_y = 0;
  long hvp = 0;       // Hessian-vector products, including forward-difference ones
  long cg_iters = 0;
  long hessian = 0;   // dense Hessian-block evaluations (Exact mode)

  OpCounts& operator+=(const OpCounts& o);
};

/// Adam moments for both players.
struct PreconditionerState {
  Vec m_x, v_x, m_y, v_y;
  long step = 0;
};

/// Adam update with bias correction. Returns m_hat / (sqrt(v_hat) + eps) per
/// coordinate; identity when `adam` is unset.
std::pair<Vec, Vec> precondition_apply(PreconditionerState& state,
                                       const std::optional<AdamParams>& adam, const Vec& grad_x,
                                       const Vec& grad_y);

/// Mutable per-run state. Never shared between runs.
struct RunState {
  linalg::DgState dg;
  PreconditionerState precond;
  std::optional<Vec> prev_grad_x;  // OGDA history
  std::optional<Vec> prev_grad_y;
  OpCounts counts;
};

PointXY step_ttsgda(const MinimaxProblem& f, const PointXY& p, const OptimizerConfig& cfg,
                    RunState& st);
PointXY step_gda_k(const MinimaxProblem& f, const PointXY& p, const OptimizerConfig& cfg,
                   RunState& st);
PointXY step_eg(const MinimaxProblem& f, const PointXY& p, const OptimizerConfig& cfg,
                RunState& st);
PointXY step_ogda(const MinimaxProblem& f, const PointXY& p, const OptimizerConfig& cfg,
                  RunState& st);
PointXY step_sga(const MinimaxProblem& f, const PointXY& p, const OptimizerConfig& cfg,
                 RunState& st);
PointXY step_co(const MinimaxProblem& f, const PointXY& p, const OptimizerConfig& cfg,
                RunState& st);
/// HessianFR with eta_y2 forced to 0.
PointXY step_fr(const MinimaxProblem& f, const PointXY& p, const OptimizerConfig& cfg,
                RunState& st);
PointXY step_hessianfr(const MinimaxProblem& f, const PointXY& p, const OptimizerConfig& cfg,
                       RunState& st);
PointXY step_gdn(const MinimaxProblem& f, const PointXY& p, const OptimizerConfig& cfg,
                 RunState& st);

/// Dispatches on cfg.algorithm.
PointXY step(const MinimaxProblem& f, const PointXY& p, const OptimizerConfig& cfg, RunState& st);

/// Uniform sampling of `batch` distinct indices out of n, returned ascending.
class MinibatchSampler {
 public:
  MinibatchSampler(std::size_t n, std::size_t batch, std::uint64_t seed);
  std::vector<std::size_t> next();
  std::size_t batch_size() const { return batch_; }

 private:
  std::size_t n_;
  std::size_t batch_;
  std::mt19937_64 rng_;
};

/// One step of the configured algorithm on the minibatch average over `batch`.
PointXY step_stochastic(const FiniteSumProblem& fs, std::span<const std::size_t> batch,
                        const PointXY& p, const OptimizerConfig& cfg, RunState& st);

struct StopCriteria {
  long max_iters = 1000;
  double grad_tol = 1e-8;         // on max(||grad_x||, ||grad_y||), checked at recorded steps
  double divergence_norm = 1e6;   // abort when ||z|| exceeds this
  long record_stride = 1;

  void validate() const;
};

struct RunResult {
  Trajectory trajectory;
  PointXY final_point;
  long iterations = 0;
  bool converged = false;
  bool diverged = false;
  std::optional<ErrorKind> error_kind;  // stepper failure; the trajectory is partial
  std::string error_message;
  OpCounts counts;
  double wall_time = 0.0;
};

/// Iterates the configured algorithm from `initial`. Records step 0, every
/// `record_stride`-th step and the final step.
RunResult run(const MinimaxProblem& f, const PointXY& initial, const OptimizerConfig& cfg,
              const StopCriteria& stop);

struct StochasticOptions {
  std::size_t batch_size = 1;
  std::uint64_t seed = 0;
};

/// As run(), drawing a fresh minibatch per step. Gradient norms are
/// monitored on the full average.
RunResult run_stochastic(const FiniteSumProblem& fs, const PointXY& initial,
                         const OptimizerConfig& cfg, const StopCriteria& stop,
                         const StochasticOptions& sopt);

}  // namespace hfr::opt
