#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "experiment.hpp"

namespace {

using hfr::cli::ExperimentConfig;
using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitNumerical = 2;

int ExitCodeFor(hfr::ErrorKind kind) {
  return kind == hfr::ErrorKind::kNumerical ? kExitNumerical : kExitConfig;
}

void PrintDiagnostic(const std::string& kind, const std::string& message) {
  std::cout << json{{"error", message}, {"kind", kind}}.dump(2) << "\n";
}

hfr::PointXY PointArg(const std::vector<double>& values, const hfr::MinimaxProblem& f) {
  const hfr::Index d1 = f.dim_x(), d2 = f.dim_y();
  if (values.empty()) return hfr::PointXY(hfr::Vec::Zero(d1), hfr::Vec::Zero(d2));
  if (static_cast<hfr::Index>(values.size()) != d1 + d2)
    throw hfr::ConfigError("--point needs " + std::to_string(d1 + d2) + " values");
  hfr::Vec z(d1 + d2);
  for (hfr::Index i = 0; i < z.size(); ++i) z[i] = values[static_cast<std::size_t>(i)];
  return hfr::PointXY::FromStacked(z, d1);
}

int CmdRun(const std::string& path) {
  const ExperimentConfig cfg = hfr::cli::load_config(path);
  const auto summary = hfr::cli::run_experiment(cfg);
  for (const auto& o : summary.outcomes) {
    const auto& r = o.result;
    std::printf("%-20s iters=%-8ld %s  max|grad|=%.3e  -> %s\n", o.name.c_str(), r.iterations,
                r.converged  ? "converged"
                : r.diverged ? "diverged "
                : r.error_kind ? "error    "
                               : "stopped  ",
                r.trajectory.empty() ? 0.0 : r.trajectory.back().max_grad_norm(),
                o.csv_path.c_str());
    if (r.error_kind) std::fprintf(stderr, "%s: %s\n", o.name.c_str(), r.error_message.c_str());
  }
  return summary.any_numerical_error ? kExitNumerical : kExitOk;
}

int CmdClassify(const std::string& path, const std::vector<double>& point, double grad_tol) {
  const ExperimentConfig cfg = hfr::cli::load_config(path);
  const auto inst = hfr::cli::make_problem(cfg.problem, cfg.problem.value("seed", 0ULL));
  const hfr::PointXY p = PointArg(point, inst.problem());
  try {
    const auto rep = hfr::analysis::classify_point(inst.problem(), p, grad_tol);
    std::cout << hfr::cli::report_to_json(rep).dump(2) << "\n";
  } catch (const hfr::Error& e) {
    PrintDiagnostic(e.kind() == hfr::ErrorKind::kConfig ? "config" : "numerical", e.what());
    return ExitCodeFor(e.kind());
  }
  return kExitOk;
}

struct SpectrumArgs {
  std::string alg;
  std::vector<double> point;
  std::optional<double> eta_x, c1, c2, c;
};

int CmdSpectrum(const std::string& path, const SpectrumArgs& a) {
  const ExperimentConfig cfg = hfr::cli::load_config(path);
  const auto inst = hfr::cli::make_problem(cfg.problem, cfg.problem.value("seed", 0ULL));
  const hfr::PointXY p = PointArg(a.point, inst.problem());

  // Hyperparameters: the matching [[algorithm]] (by name, then type), then flags.
  std::optional<hfr::opt::OptimizerConfig> base;
  for (const auto& s : cfg.algorithms)
    if (s.name == a.alg) base = s.config;
  if (!base)
    for (const auto& s : cfg.algorithms)
      if (hfr::opt::to_string(s.config.algorithm) == a.alg) base = s.config;
  hfr::opt::OptimizerConfig c = base.value_or(hfr::opt::OptimizerConfig{});
  if (!base) c.algorithm = hfr::opt::algorithm_from_string(a.alg);
  if (a.eta_x) c.eta_x = *a.eta_x;
  if (a.c1) c.eta_y1 = *a.c1 * c.eta_x;
  if (a.c2) c.eta_y2 = *a.c2 * c.eta_x;
  if (a.c) c.eta_y = *a.c * c.eta_x;

  const auto rep = hfr::cli::spectrum_for(inst.problem(), p, c);
  json out = hfr::cli::report_to_json(rep);
  out["eta_x"] = c.eta_x;
  if (c.algorithm == hfr::opt::Algorithm::kHessianFr || c.algorithm == hfr::opt::Algorithm::kFr) {
    const double c2 = c.algorithm == hfr::opt::Algorithm::kFr ? 0.0 : c.c2();
    out["c1"] = c.c1();
    out["c2"] = c2;
    auto blocks = inst.problem().hessian_blocks(p);
    if (blocks) {
      try {
        const auto rb = hfr::analysis::rate_bounds(*blocks, c.c1(), c2);
        out["rate_bounds"] = {{"kappa_hfr", rb.kappa_hfr},
                              {"kappa_fr", rb.kappa_fr},
                              {"kappa_gdn", rb.kappa_gdn},
                              {"eta_x_max_hfr", rb.eta_x_max_hfr}};
      } catch (const hfr::Error&) {
        out["rate_bounds"] = nullptr;  // not a strict local minimax
      }
    }
  }
  std::cout << out.dump(2) << "\n";
  return kExitOk;
}

int CmdBench(const std::string& path, long iters, bool as_json) {
  const ExperimentConfig cfg = hfr::cli::load_config(path);
  const auto rows = hfr::cli::bench(cfg, iters);
  if (as_json) {
    json arr = json::array();
    for (const auto& r : rows)
      arr.push_back({{"algorithm", r.name},
                     {"iterations", r.iterations},
                     {"grad_evals_per_step", r.grad_evals_per_step},
                     {"hvp_per_step", r.hvp_per_step},
                     {"cg_iters_per_step", r.cg_iters_per_step},
                     {"seconds_per_100_iters", r.seconds_per_100}});
    std::cout << arr.dump(2) << "\n";
  } else {
    std::cout << hfr::cli::format_cost_table(rows);
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Minimax optimization experiments: HessianFR, FR, GDN and GDA-family baselines"};
  app.require_subcommand(1);

  std::string config;
  auto* run = app.add_subcommand("run", "Run every configured algorithm and write trajectories");
  run->add_option("config", config, "Experiment config (TOML)")->required();

  std::vector<double> point;
  double grad_tol = 1e-8;
  auto* classify = app.add_subcommand("classify", "Nash / minimax classification of a point");
  classify->add_option("config", config, "Experiment config (TOML)")->required();
  classify->add_option("--point", point, "Stacked (x, y), comma separated")->delimiter(',');
  classify->add_option("--grad-tol", grad_tol, "Criticality tolerance");

  SpectrumArgs sargs;
  auto* spectrum = app.add_subcommand("spectrum", "Jacobian spectral radius at a point");
  spectrum->add_option("config", config, "Experiment config (TOML)")->required();
  spectrum->add_option("--alg", sargs.alg, "Algorithm name or type")->required();
  spectrum->add_option("--point", sargs.point, "Stacked (x, y), comma separated")->delimiter(',');
  spectrum->add_option("--eta-x", sargs.eta_x, "Leader step size");
  spectrum->add_option("--c1", sargs.c1, "eta_y1 / eta_x");
  spectrum->add_option("--c2", sargs.c2, "eta_y2 / eta_x");
  spectrum->add_option("--c", sargs.c, "eta_y / eta_x (ttsgda, eg)");

  long iters = 100;
  bool as_json = false;
  auto* benchcmd = app.add_subcommand("bench", "Per-step operation counts and timings");
  benchcmd->add_option("config", config, "Experiment config (TOML)")->required();
  benchcmd->add_option("--iters", iters, "Iterations per algorithm");
  benchcmd->add_flag("--json", as_json, "Emit JSON instead of a table");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*run) return CmdRun(config);
    if (*classify) return CmdClassify(config, point, grad_tol);
    if (*spectrum) return CmdSpectrum(config, sargs);
    if (*benchcmd) return CmdBench(config, iters, as_json);
  } catch (const hfr::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return ExitCodeFor(e.kind());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitConfig;
  }
  return kExitConfig;
}
