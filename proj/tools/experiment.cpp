#include "experiment.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "hfr/linalg.hpp"
#include "hfr/problems.hpp"
#include "toml_lite.hpp"

namespace hfr::cli {

using nlohmann::json;

namespace {

void RequireKnownKeys(const json& table, const std::set<std::string>& allowed,
                      const std::string& where) {
  if (!table.is_object()) throw ConfigError("[" + where + "] must be a table");
  for (const auto& [key, _] : table.items())
    if (!allowed.count(key)) throw ConfigError("unknown key '" + key + "' in [" + where + "]");
}

double GetDouble(const json& t, const std::string& key, double def) {
  if (!t.contains(key)) return def;
  if (!t[key].is_number()) throw ConfigError("'" + key + "' must be a number");
  return t[key].get<double>();
}

long GetInt(const json& t, const std::string& key, long def) {
  if (!t.contains(key)) return def;
  if (!t[key].is_number_integer()) throw ConfigError("'" + key + "' must be an integer");
  return t[key].get<long>();
}

bool GetBool(const json& t, const std::string& key, bool def) {
  if (!t.contains(key)) return def;
  if (!t[key].is_boolean()) throw ConfigError("'" + key + "' must be true or false");
  return t[key].get<bool>();
}

std::string GetString(const json& t, const std::string& key, const std::string& def) {
  if (!t.contains(key)) return def;
  if (!t[key].is_string()) throw ConfigError("'" + key + "' must be a string");
  return t[key].get<std::string>();
}

Vec ToVec(const json& j, const std::string& key) {
  if (j.is_number()) return Vec::Constant(1, j.get<double>());
  if (!j.is_array()) throw ConfigError("'" + key + "' must be a number array");
  Vec v(static_cast<Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw ConfigError("'" + key + "' must be a number array");
    v[static_cast<Index>(i)] = j[i].get<double>();
  }
  return v;
}

Mat ToMat(const json& j, const std::string& key) {
  if (j.is_number()) return Mat::Constant(1, 1, j.get<double>());
  if (!j.is_array() || j.empty()) throw ConfigError("'" + key + "' must be a matrix");
  if (!j[0].is_array()) {  // a single row
    Vec row = ToVec(j, key);
    return row.transpose();
  }
  const Index rows = static_cast<Index>(j.size());
  const Index cols = static_cast<Index>(j[0].size());
  Mat m(rows, cols);
  for (Index r = 0; r < rows; ++r) {
    const Vec row = ToVec(j[static_cast<std::size_t>(r)], key);
    if (row.size() != cols) throw ConfigError("'" + key + "' has ragged rows");
    m.row(r) = row.transpose();
  }
  return m;
}

std::vector<int> ToIntList(const json& j, const std::string& key) {
  if (!j.is_array()) throw ConfigError("'" + key + "' must be an integer array");
  std::vector<int> out;
  for (const auto& v : j) {
    if (!v.is_number_integer()) throw ConfigError("'" + key + "' must be an integer array");
    out.push_back(v.get<int>());
  }
  return out;
}

std::uint64_t GetSeed(const json& t, const std::string& key, std::uint64_t def, bool forced) {
  if (forced || !t.is_object() || !t.contains(key)) return def;
  const long v = GetInt(t, key, 0);
  if (v < 0) throw ConfigError("'" + key + "' must be >= 0");
  return static_cast<std::uint64_t>(v);
}

std::optional<std::uint64_t> SeedFromEnv() {
  const char* s = std::getenv(kSeedEnv);
  if (!s || !*s) return std::nullopt;
  char* end = nullptr;
  const unsigned long long v = std::strtoull(s, &end, 10);
  if (*end != '\0') throw ConfigError(std::string(kSeedEnv) + " must be a non-negative integer");
  return static_cast<std::uint64_t>(v);
}

const std::set<std::string> kOptimizerKeys = {
    "name",       "type",       "eta_x",      "eta_y",       "eta_y1",     "eta_y2",
    "fd_alpha",   "hess_inv",   "cg_iters",   "cg_tol",      "cg_damping", "adam",
    "adam_beta1", "adam_beta2", "adam_eps",   "k_inner",     "sga_lambda", "co_gamma",
    "hvp_source", "dg_fixed_leader", "iters"};

std::string Num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

json VecJson(const Vec& v) {
  json a = json::array();
  for (Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

json MatJson(const Mat& m) {
  json a = json::array();
  for (Index r = 0; r < m.rows(); ++r) a.push_back(VecJson(m.row(r).transpose()));
  return a;
}

json CountsJson(const opt::OpCounts& c) {
  return {{"grad_x", c.grad_x}, {"grad_y", c.grad_y}, {"hvp", c.hvp},
          {"cg_iters", c.cg_iters}, {"hessian", c.hessian}};
}

void WriteFile(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot write '" + path.string() + "'");
  f << text;
  if (!f) throw ConfigError("cannot write '" + path.string() + "'");
}

}  // namespace

opt::OptimizerConfig optimizer_from_json(const json& t) {
  RequireKnownKeys(t, kOptimizerKeys, "algorithm");
  opt::OptimizerConfig c;
  if (!t.contains("type")) throw ConfigError("algorithm table needs a 'type'");
  c.algorithm = opt::algorithm_from_string(GetString(t, "type", ""));
  c.eta_x = GetDouble(t, "eta_x", c.eta_x);
  c.eta_y = GetDouble(t, "eta_y", c.eta_y);
  c.eta_y1 = GetDouble(t, "eta_y1", c.eta_y1);
  c.eta_y2 = GetDouble(t, "eta_y2", c.algorithm == opt::Algorithm::kGdn ? 1.0 : c.eta_y2);
  if (t.contains("fd_alpha")) c.fd_alpha = GetDouble(t, "fd_alpha", 0.0);
  c.hess_inv = opt::hess_inv_mode_from_string(GetString(t, "hess_inv", "exact"));
  c.cg.max_iters = static_cast<int>(GetInt(t, "cg_iters", c.cg.max_iters));
  c.cg.residual_tol = GetDouble(t, "cg_tol", c.cg.residual_tol);
  c.cg.damping = GetDouble(t, "cg_damping", c.cg.damping);
  if (GetBool(t, "adam", false)) {
    opt::AdamParams a;
    a.beta1 = GetDouble(t, "adam_beta1", a.beta1);
    a.beta2 = GetDouble(t, "adam_beta2", a.beta2);
    a.eps = GetDouble(t, "adam_eps", a.eps);
    c.adam = a;
  }
  c.k_inner = static_cast<int>(GetInt(t, "k_inner", c.k_inner));
  c.sga_lambda = GetDouble(t, "sga_lambda", c.sga_lambda);
  c.co_gamma = GetDouble(t, "co_gamma", c.co_gamma);
  const std::string src = GetString(t, "hvp_source", "fd");
  if (src == "fd") {
    c.hvp_source = opt::HvpSource::kFiniteDifference;
  } else if (src == "problem") {
    c.hvp_source = opt::HvpSource::kProblem;
  } else {
    throw ConfigError("hvp_source must be \"fd\" or \"problem\"");
  }
  c.dg_fixed_leader = GetBool(t, "dg_fixed_leader", false);
  c.validate();
  return c;
}

ProblemInstance make_problem(const json& spec, std::uint64_t seed) {
  if (!spec.is_object()) throw ConfigError("missing [problem] table");
  ProblemInstance inst;
  inst.type = GetString(spec, "type", "");
  const std::string& type = inst.type;
  if (type == "g1" || type == "g2" || type == "g3") {
    RequireKnownKeys(spec, {"type", "seed"}, "problem");
    inst.owned = type == "g1" ? problems::make_g1()
                 : type == "g2" ? problems::make_g2()
                                : problems::make_g3();
  } else if (type == "quadratic") {
    RequireKnownKeys(spec, {"type", "seed", "a", "b", "c", "lin_x", "lin_y"}, "problem");
    for (const char* k : {"a", "b", "c"})
      if (!spec.contains(k)) throw ConfigError(std::string("quadratic problem needs '") + k + "'");
    Mat a = ToMat(spec["a"], "a"), b = ToMat(spec["b"], "b"), c = ToMat(spec["c"], "c");
    Vec lx = spec.contains("lin_x") ? ToVec(spec["lin_x"], "lin_x") : Vec::Zero(a.rows());
    Vec ly = spec.contains("lin_y") ? ToVec(spec["lin_y"], "lin_y") : Vec::Zero(c.rows());
    inst.owned = std::make_shared<problems::QuadraticGame>(a, b, c, lx, ly);
  } else if (type == "schur_quadratic") {
    RequireKnownKeys(spec, {"type", "seed", "schur", "hxy", "hyy"}, "problem");
    for (const char* k : {"schur", "hxy", "hyy"})
      if (!spec.contains(k)) throw ConfigError(std::string("schur_quadratic needs '") + k + "'");
    inst.owned = problems::make_quadratic_from_schur(
        ToMat(spec["schur"], "schur"), ToMat(spec["hxy"], "hxy"), ToMat(spec["hyy"], "hyy"));
  } else if (type == "random_quadratic") {
    RequireKnownKeys(spec, {"type", "seed", "d1", "d2", "eig_lo", "eig_hi"}, "problem");
    inst.owned = problems::make_random_strict_minimax(
        GetInt(spec, "d1", 3), GetInt(spec, "d2", 3), seed, GetDouble(spec, "eig_lo", 0.5),
        GetDouble(spec, "eig_hi", 3.0));
  } else if (type == "finite_sum_quadratic") {
    RequireKnownKeys(spec,
                     {"type", "seed", "n", "d1", "d2", "perturbation", "linear_scale", "eig_lo",
                      "eig_hi"},
                     "problem");
    problems::FiniteSumQuadraticOptions o;
    const long n = GetInt(spec, "n", static_cast<long>(o.n));
    if (n < 1) throw ConfigError("n must be >= 1");
    o.n = static_cast<std::size_t>(n);
    o.d1 = GetInt(spec, "d1", o.d1);
    o.d2 = GetInt(spec, "d2", o.d2);
    o.seed = seed;
    o.perturbation = GetDouble(spec, "perturbation", o.perturbation);
    o.linear_scale = GetDouble(spec, "linear_scale", o.linear_scale);
    o.eig_lo = GetDouble(spec, "eig_lo", o.eig_lo);
    o.eig_hi = GetDouble(spec, "eig_hi", o.eig_hi);
    inst.finite = problems::make_finite_sum_quadratic(o);
  } else if (type == "mixture_gan") {
    RequireKnownKeys(spec,
                     {"type", "seed", "generator_hidden", "discriminator_hidden", "noise_dim",
                      "n_data", "m_noise", "l2_reg"},
                     "problem");
    problems::MixtureGanOptions o;
    if (spec.contains("generator_hidden"))
      o.generator_hidden = ToIntList(spec["generator_hidden"], "generator_hidden");
    if (spec.contains("discriminator_hidden"))
      o.discriminator_hidden = ToIntList(spec["discriminator_hidden"], "discriminator_hidden");
    o.noise_dim = static_cast<int>(GetInt(spec, "noise_dim", o.noise_dim));
    const long nd = GetInt(spec, "n_data", static_cast<long>(o.n_data));
    const long mn = GetInt(spec, "m_noise", static_cast<long>(o.m_noise));
    if (nd < 1 || mn < 1) throw ConfigError("n_data and m_noise must be >= 1");
    o.n_data = static_cast<std::size_t>(nd);
    o.m_noise = static_cast<std::size_t>(mn);
    o.l2_reg = GetDouble(spec, "l2_reg", o.l2_reg);
    o.seed = seed;
    auto gan = problems::make_mixture_gan(o);
    inst.default_initial = gan->initial_point(seed + 1000);
    inst.finite = gan;
  } else {
    throw ConfigError("unknown problem type '" + type + "'");
  }
  return inst;
}

ExperimentConfig config_from_json(const json& doc) {
  RequireKnownKeys(doc,
                   {"seed", "problem", "initial", "stop", "pretrain", "stochastic", "output",
                    "algorithm"},
                   "top level");
  ExperimentConfig cfg;
  const auto env_seed = SeedFromEnv();
  const bool forced = env_seed.has_value();
  cfg.seed = forced ? *env_seed : GetSeed(doc, "seed", 0, false);

  if (!doc.contains("problem")) throw ConfigError("missing [problem] table");
  cfg.problem = doc["problem"];
  cfg.problem["seed"] = GetSeed(cfg.problem, "seed", cfg.seed, forced);

  if (doc.contains("initial")) {
    const json& t = doc["initial"];
    RequireKnownKeys(t, {"point", "center", "radius", "seed"}, "initial");
    if (t.contains("point") && t.contains("center"))
      throw ConfigError("[initial] takes either 'point' or 'center', not both");
    if (t.contains("point")) cfg.initial.point = ToVec(t["point"], "point");
    if (t.contains("center")) {
      cfg.initial.center = ToVec(t["center"], "center");
      cfg.initial.radius = GetDouble(t, "radius", 1.0);
      if (!(cfg.initial.radius >= 0.0)) throw ConfigError("radius must be >= 0");
    }
    cfg.initial.seed = GetSeed(t, "seed", cfg.seed + 1, forced);
  } else {
    cfg.initial.seed = cfg.seed + 1;
  }

  if (doc.contains("stop")) {
    const json& t = doc["stop"];
    RequireKnownKeys(t, {"max_iters", "grad_tol", "divergence_norm", "record_stride"}, "stop");
    cfg.stop.max_iters = GetInt(t, "max_iters", cfg.stop.max_iters);
    cfg.stop.grad_tol = GetDouble(t, "grad_tol", cfg.stop.grad_tol);
    cfg.stop.divergence_norm = GetDouble(t, "divergence_norm", cfg.stop.divergence_norm);
    cfg.stop.record_stride = GetInt(t, "record_stride", cfg.stop.record_stride);
  }
  cfg.stop.validate();

  if (doc.contains("stochastic")) {
    const json& t = doc["stochastic"];
    RequireKnownKeys(t, {"batch_size", "seed"}, "stochastic");
    StochasticSpec s;
    const long b = GetInt(t, "batch_size", 1);
    if (b < 1) throw ConfigError("batch_size must be >= 1");
    s.batch_size = static_cast<std::size_t>(b);
    s.seed = GetSeed(t, "seed", cfg.seed + 2, forced);
    cfg.stochastic = s;
  }

  if (doc.contains("pretrain")) {
    json t = doc["pretrain"];
    if (t.contains("algorithm")) {
      t["type"] = t["algorithm"];
      t.erase("algorithm");
    }
    PretrainSpec p;
    p.iters = GetInt(t, "iters", 0);
    if (p.iters < 0) throw ConfigError("pretrain iters must be >= 0");
    p.config = optimizer_from_json(t);
    cfg.pretrain = p;
  }

  if (!doc.contains("algorithm") || !doc["algorithm"].is_array() || doc["algorithm"].empty())
    throw ConfigError("at least one [[algorithm]] is required");
  std::set<std::string> names;
  for (const auto& t : doc["algorithm"]) {
    AlgorithmSpec a;
    a.config = optimizer_from_json(t);
    if (t.contains("iters")) throw ConfigError("'iters' belongs in [stop] or [pretrain]");
    a.name = GetString(t, "name", opt::to_string(a.config.algorithm));
    if (a.name.empty() || a.name.find_first_of("/\\") != std::string::npos)
      throw ConfigError("invalid algorithm name '" + a.name + "'");
    if (!names.insert(a.name).second)
      throw ConfigError("duplicate algorithm name '" + a.name + "'");
    cfg.algorithms.push_back(std::move(a));
  }

  if (doc.contains("output")) {
    const json& t = doc["output"];
    RequireKnownKeys(t, {"dir", "wall_time"}, "output");
    cfg.output_dir = GetString(t, "dir", cfg.output_dir);
    cfg.record_wall_time = GetBool(t, "wall_time", true);
  }
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  return config_from_json(parse_toml_file(path));
}

PointXY make_initial(const InitialSpec& spec, const ProblemInstance& inst) {
  const MinimaxProblem& f = inst.problem();
  const Index d1 = f.dim_x(), d2 = f.dim_y();
  if (spec.point) {
    if (spec.point->size() != d1 + d2)
      throw ConfigError("initial point needs " + std::to_string(d1 + d2) + " entries");
    return PointXY::FromStacked(*spec.point, d1);
  }
  if (spec.center) {
    if (spec.center->size() != d1 + d2)
      throw ConfigError("initial center needs " + std::to_string(d1 + d2) + " entries");
    // Uniform in the ball: Gaussian direction, radius r * u^(1/n).
    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> normal;
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    Vec dir(d1 + d2);
    for (Index i = 0; i < dir.size(); ++i) dir[i] = normal(rng);
    const double r = spec.radius * std::pow(uni(rng), 1.0 / static_cast<double>(dir.size()));
    return PointXY::FromStacked(*spec.center + r * dir / dir.norm(), d1);
  }
  if (inst.default_initial) return *inst.default_initial;
  throw ConfigError("an [initial] point is required for this problem");
}

std::string trajectory_csv(const Trajectory& traj, bool with_wall_time) {
  std::ostringstream out;
  out << "step,wall_time_s,grad_norm_x,grad_norm_y";
  const bool coords =
      !traj.empty() && traj.records().front().point.dim_x() + traj.records().front().point.dim_y() <= 8;
  if (coords) {
    const auto& p = traj.records().front().point;
    for (Index i = 0; i < p.dim_x(); ++i) out << ",x" << i;
    for (Index i = 0; i < p.dim_y(); ++i) out << ",y" << i;
  }
  out << "\n";
  for (const auto& r : traj.records()) {
    out << r.step << "," << Num(with_wall_time ? r.wall_time : 0.0) << "," << Num(r.grad_norm_x)
        << "," << Num(r.grad_norm_y);
    if (coords) {
      for (Index i = 0; i < r.point.dim_x(); ++i) out << "," << Num(r.point.x[i]);
      for (Index i = 0; i < r.point.dim_y(); ++i) out << "," << Num(r.point.y[i]);
    }
    out << "\n";
  }
  return out.str();
}

namespace {

opt::RunResult RunOne(const ProblemInstance& inst, const PointXY& z0,
                      const opt::OptimizerConfig& c, const opt::StopCriteria& stop,
                      const std::optional<StochasticSpec>& sto) {
  if (inst.finite && sto) {
    opt::StochasticOptions so;
    so.batch_size = sto->batch_size;
    so.seed = sto->seed;
    return opt::run_stochastic(*inst.finite, z0, c, stop, so);
  }
  return opt::run(inst.problem(), z0, c, stop);
}

}  // namespace

ExperimentSummary run_experiment(const ExperimentConfig& cfg) {
  if (cfg.algorithms.empty()) throw ConfigError("at least one [[algorithm]] is required");
  const ProblemInstance inst = make_problem(cfg.problem, cfg.problem.value("seed", 0ULL));
  ExperimentSummary summary;
  summary.initial = make_initial(cfg.initial, inst);

  json pre = nullptr;
  if (cfg.pretrain && cfg.pretrain->iters > 0) {
    opt::StopCriteria ps;
    ps.max_iters = cfg.pretrain->iters;
    ps.grad_tol = 0.0;
    ps.divergence_norm = cfg.stop.divergence_norm;
    ps.record_stride = cfg.pretrain->iters;
    std::optional<StochasticSpec> sto = cfg.stochastic;
    if (sto) sto->seed += 7919;  // keep the pretraining stream apart from the runs
    const opt::RunResult r = RunOne(inst, summary.initial, cfg.pretrain->config, ps, sto);
    if (r.error_kind || r.diverged)
      throw NumericalError("pretraining failed: " +
                           (r.error_kind ? r.error_message : std::string("diverged")));
    summary.initial = r.final_point;
    pre = {{"algorithm", opt::to_string(cfg.pretrain->config.algorithm)},
           {"iters", r.iterations},
           {"final_grad_norm_x", r.trajectory.back().grad_norm_x},
           {"final_grad_norm_y", r.trajectory.back().grad_norm_y}};
  }

  std::filesystem::path dir(cfg.output_dir);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw ConfigError("cannot create output directory '" + cfg.output_dir + "'");

  json algs = json::array();
  for (const auto& spec : cfg.algorithms) {
    AlgorithmOutcome out;
    out.name = spec.name;
    out.result = RunOne(inst, summary.initial, spec.config, cfg.stop, cfg.stochastic);
    for (const auto& rec : out.result.trajectory.records()) {
      if (rec.max_grad_norm() <= cfg.stop.grad_tol) {
        out.iterations_to_tol = rec.step;
        break;
      }
    }
    const auto path = dir / (spec.name + ".csv");
    out.csv_path = path.string();
    WriteFile(path, trajectory_csv(out.result.trajectory, cfg.record_wall_time));

    const auto& r = out.result;
    json a = {{"name", spec.name},
              {"algorithm", opt::to_string(spec.config.algorithm)},
              {"csv", out.csv_path},
              {"iterations", r.iterations},
              {"converged", r.converged},
              {"diverged", r.diverged},
              {"error", r.error_kind ? json(r.error_message) : json(nullptr)},
              {"iterations_to_tol", out.iterations_to_tol ? json(*out.iterations_to_tol) : json(nullptr)},
              {"wall_time_s", cfg.record_wall_time ? r.wall_time : 0.0},
              {"counts", CountsJson(r.counts)}};
    if (!r.trajectory.empty()) {
      a["final_grad_norm_x"] = r.trajectory.back().grad_norm_x;
      a["final_grad_norm_y"] = r.trajectory.back().grad_norm_y;
    }
    if (r.final_point.dim_x() + r.final_point.dim_y() <= 8)
      a["final_point"] = VecJson(r.final_point.stacked());
    if (r.error_kind == ErrorKind::kNumerical) summary.any_numerical_error = true;
    algs.push_back(std::move(a));
    summary.outcomes.push_back(std::move(out));
  }

  summary.json = {{"problem", cfg.problem},
                  {"seed", cfg.seed},
                  {"pretrain", pre},
                  {"stochastic", cfg.stochastic ? json{{"batch_size", cfg.stochastic->batch_size},
                                                       {"seed", cfg.stochastic->seed}}
                                                : json(nullptr)},
                  {"grad_tol", cfg.stop.grad_tol},
                  {"algorithms", algs}};
  if (summary.initial.dim_x() + summary.initial.dim_y() <= 8)
    summary.json["initial_point"] = VecJson(summary.initial.stacked());
  WriteFile(dir / "summary.json", summary.json.dump(2) + "\n");
  return summary;
}

json report_to_json(const analysis::CriticalPointReport& rep) {
  return {{"is_critical", rep.is_critical},
          {"grad_norm_x", rep.grad_norm_x},
          {"grad_norm_y", rep.grad_norm_y},
          {"nash", analysis::to_string(rep.nash)},
          {"minimax", analysis::to_string(rep.minimax)},
          {"tau", rep.tau},
          {"eigenvalues",
           {{"hxx", VecJson(rep.evidence.hxx)},
            {"hyy", VecJson(rep.evidence.hyy)},
            {"schur", rep.evidence.schur.size() ? VecJson(rep.evidence.schur) : json(nullptr)}}}};
}

json report_to_json(const analysis::SpectralReport& rep) {
  json j = {{"algorithm", rep.algorithm},
            {"spectral_radius", rep.spectral_radius},
            {"converges", rep.converges}};
  if (rep.jacobian.rows() <= 16) j["jacobian"] = MatJson(rep.jacobian);
  if (rep.similarity_gap > 0.0) j["similarity_gap"] = rep.similarity_gap;
  return j;
}

analysis::SpectralReport spectrum_for(const MinimaxProblem& f, const PointXY& p,
                                      const opt::OptimizerConfig& c) {
  auto blocks = f.hessian_blocks(p);
  const HessianBlocks h = blocks ? *blocks : linalg::fd_hessian_blocks(f, p);
  switch (c.algorithm) {
    case opt::Algorithm::kHessianFr: return analysis::jacobian_hessianfr(h, c.eta_x, c.c1(), c.c2());
    case opt::Algorithm::kFr: return analysis::jacobian_fr(h, c.eta_x, c.c1());
    case opt::Algorithm::kGdn: return analysis::jacobian_gdn(h, c.eta_x);
    case opt::Algorithm::kTtsgda: return analysis::jacobian_ttsgda(h, c.eta_x, c.eta_y / c.eta_x);
    case opt::Algorithm::kEg: return analysis::jacobian_eg(h, c.eta_x, c.eta_y / c.eta_x);
    default:
      throw ConfigError("no Jacobian model for '" + opt::to_string(c.algorithm) + "'");
  }
}

std::vector<CostRow> bench(const ExperimentConfig& cfg, long iters) {
  if (iters < 1) throw ConfigError("bench needs at least one iteration");
  const ProblemInstance inst = make_problem(cfg.problem, cfg.problem.value("seed", 0ULL));
  const PointXY z0 = make_initial(cfg.initial, inst);
  opt::StopCriteria stop;
  stop.max_iters = iters;
  stop.grad_tol = 0.0;
  stop.divergence_norm = cfg.stop.divergence_norm;
  stop.record_stride = iters;
  std::vector<CostRow> rows;
  for (const auto& spec : cfg.algorithms) {
    const opt::RunResult r = RunOne(inst, z0, spec.config, stop, cfg.stochastic);
    CostRow row;
    row.name = spec.name;
    row.iterations = r.iterations;
    if (r.iterations > 0) {
      const double n = static_cast<double>(r.iterations);
      row.grad_evals_per_step = static_cast<double>(r.counts.grad_x + r.counts.grad_y) / n;
      row.hvp_per_step = static_cast<double>(r.counts.hvp) / n;
      row.cg_iters_per_step = static_cast<double>(r.counts.cg_iters) / n;
      row.seconds_per_100 = r.wall_time * 100.0 / n;
    }
    rows.push_back(row);
  }
  return rows;
}

std::string format_cost_table(const std::vector<CostRow>& rows) {
  std::ostringstream out;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-20s %8s %10s %10s %10s %12s\n", "algorithm", "iters",
                "grad/step", "hvp/step", "cg/step", "s/100 iters");
  out << buf;
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%-20s %8ld %10.3f %10.3f %10.3f %12.6f\n", r.name.c_str(),
                  r.iterations, r.grad_evals_per_step, r.hvp_per_step, r.cg_iters_per_step,
                  r.seconds_per_100);
    out << buf;
  }
  return out.str();
}

}  // namespace hfr::cli
