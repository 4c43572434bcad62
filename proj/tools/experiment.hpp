#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "hfr/analysis.hpp"
#include "hfr/optimizers.hpp"
#include "hfr/problem.hpp"

namespace hfr::cli {

/// Seed override: when set, every seed in a config is derived from it.
inline constexpr const char* kSeedEnv = "HFR_SEED";

/// A constructed problem: deterministic, or finite-sum with its average.
struct ProblemInstance {
  std::string type;
  std::shared_ptr<const MinimaxProblem> owned;      // deterministic problems
  std::shared_ptr<const FiniteSumProblem> finite;   // finite-sum problems
  std::optional<PointXY> default_initial;           // e.g. network initialization

  const MinimaxProblem& problem() const { return finite ? finite->full() : *owned; }
};

struct InitialSpec {
  std::optional<Vec> point;  // stacked (x, y)
  std::optional<Vec> center; // random ball
  double radius = 0.0;
  std::uint64_t seed = 0;
};

struct PretrainSpec {
  opt::OptimizerConfig config;
  long iters = 0;
};

struct StochasticSpec {
  std::size_t batch_size = 1;
  std::uint64_t seed = 0;
};

struct AlgorithmSpec {
  std::string name;  // output file stem
  opt::OptimizerConfig config;
};

struct ExperimentConfig {
  nlohmann::json problem;  // raw [problem] table
  std::uint64_t seed = 0;
  InitialSpec initial;
  opt::StopCriteria stop;
  std::optional<PretrainSpec> pretrain;
  std::optional<StochasticSpec> stochastic;
  std::vector<AlgorithmSpec> algorithms;
  std::string output_dir = "out";
  bool record_wall_time = true;  // false writes 0 so CSVs are byte-reproducible
};

/// Builds an ExperimentConfig from the parsed TOML tree; applies HFR_SEED.
ExperimentConfig config_from_json(const nlohmann::json& doc);
ExperimentConfig load_config(const std::string& path);

/// Optimizer settings from one [[algorithm]] (or [pretrain]) table.
opt::OptimizerConfig optimizer_from_json(const nlohmann::json& table);

ProblemInstance make_problem(const nlohmann::json& spec, std::uint64_t seed);

/// Explicit point, random ball, or the problem's own default.
PointXY make_initial(const InitialSpec& spec, const ProblemInstance& inst);

struct AlgorithmOutcome {
  std::string name;
  std::string csv_path;
  opt::RunResult result;
  std::optional<long> iterations_to_tol;  // first recorded step meeting grad_tol
};

struct ExperimentSummary {
  PointXY initial;  // after pretraining
  std::vector<AlgorithmOutcome> outcomes;
  nlohmann::json json;
  bool any_numerical_error = false;
};

/// Runs every algorithm from the same (pretrained) initial point, writes one
/// CSV per algorithm plus summary.json into output_dir.
ExperimentSummary run_experiment(const ExperimentConfig& cfg);

/// CSV text for a trajectory; coordinates are included when d1 + d2 <= 8.
std::string trajectory_csv(const Trajectory& traj, bool with_wall_time = true);

nlohmann::json report_to_json(const analysis::CriticalPointReport& rep);
nlohmann::json report_to_json(const analysis::SpectralReport& rep);

/// Spectral report of `alg` at point `p` with the given hyperparameters:
/// eta_x and c1, c2 for the HessianFR family; c = eta_y / eta_x for
/// ttsgda / eg.
analysis::SpectralReport spectrum_for(const MinimaxProblem& f, const PointXY& p,
                                      const opt::OptimizerConfig& cfg);

struct CostRow {
  std::string name;
  long iterations = 0;
  double grad_evals_per_step = 0.0;  // grad_x + grad_y
  double hvp_per_step = 0.0;
  double cg_iters_per_step = 0.0;
  double seconds_per_100 = 0.0;
};

/// Runs each algorithm for `iters` steps and reports per-step operation counts.
std::vector<CostRow> bench(const ExperimentConfig& cfg, long iters);

std::string format_cost_table(const std::vector<CostRow>& rows);

}  // namespace hfr::cli
