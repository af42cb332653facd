// swc: randomized robust anti-windup synthesis toolkit, batch front end.
//
// Commands: complexity, analyze, synthesize, gaincurve, simulate, benchmark.
// Exit codes: 0 success, 2 infeasible result, 1 error.

#include "swc/awlmi.hpp"
#include "swc/awsys.hpp"
#include "swc/probbounds.hpp"
#include "swc/scenario.hpp"
#include "swc/sim.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>

#ifndef SWC_VERSION
#define SWC_VERSION "unversioned"
#endif

namespace {

using nlohmann::json;
using namespace swc;

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitInfeasible = 2;

struct CliError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CliError("cannot open file: " + path);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CliError("cannot write file: " + path.string());
  out << text;
}

json load_config(const std::string& path, const std::set<std::string>& allowed) {
  json cfg;
  try {
    cfg = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw CliError("config " + path + " is not valid JSON: " + e.what());
  }
  if (!cfg.is_object()) throw CliError("config must be a JSON object");
  if (!cfg.contains("schema") || cfg.at("schema").get<int>() != 1)
    throw CliError("config must declare \"schema\": 1");
  for (auto it = cfg.begin(); it != cfg.end(); ++it)
    if (it.key() != "schema" && !allowed.count(it.key()))
      throw CliError("unknown config key \"" + it.key() + "\" in " + path);
  return cfg;
}

struct CommonFlags {
  std::string config_path;
  std::string out_dir = ".";
  std::uint64_t seed = 1;
  int threads = 1;
  bool paper_scale = false;
};

// model loading: built-in benchmark or a model JSON file
awsys::BenchmarkModel load_model(const json& cfg) {
  std::string spec = cfg.value("model", std::string("benchmark"));
  if (spec == "benchmark") {
    auto [plant, controller] = awsys::benchmark_nominal();
    return {plant, controller, awsys::Vector::Ones(1)};
  }
  return awsys::benchmark_model_from_json(read_file(spec));
}

awlmi::Matrix d_aw_from_config(const json& cfg, int nv, int nu) {
  awlmi::Matrix d = awlmi::Matrix::Zero(nv, nu);
  if (!cfg.contains("d_aw")) return d;
  auto rows = cfg.at("d_aw");
  if (static_cast<int>(rows.size()) != nv)
    throw CliError("d_aw must have n_c + n_u rows");
  for (int r = 0; r < nv; ++r) {
    if (rows.at(r).is_number()) {
      if (nu != 1) throw CliError("d_aw rows must be arrays");
      d(r, 0) = rows.at(r).get<double>();
    } else {
      if (static_cast<int>(rows.at(r).size()) != nu)
        throw CliError("d_aw row has wrong width");
      for (int c = 0; c < nu; ++c) d(r, c) = rows.at(r).at(c).get<double>();
    }
  }
  return d;
}

sdp::SolverOptions solver_from(const json& cfg) {
  sdp::SolverOptions options;
  if (!cfg.contains("solver")) return options;
  const auto& s = cfg.at("solver");
  for (auto it = s.begin(); it != s.end(); ++it)
    if (it.key() != "feasibility_tol" && it.key() != "gap_tol")
      throw CliError("unknown solver option \"" + it.key() + "\"");
  options.feasibility_tol = s.value("feasibility_tol", options.feasibility_tol);
  options.gap_tol = s.value("gap_tol", options.gap_tol);
  return options;
}

probbounds::ProbLevels levels_from(const json& cfg, const CommonFlags& flags) {
  probbounds::ProbLevels levels{0.1, 1e-3}; // desk-scale defaults
  if (flags.paper_scale) {
    levels = {0.01, 1e-6};
    std::fprintf(stderr,
                 "warning: paper-scale levels (epsilon=0.01, delta=1e-6) "
                 "lead to sample counts in the thousands; expect very long "
                 "runtimes and large memory use\n");
  }
  if (cfg.contains("epsilon")) levels.epsilon = cfg.at("epsilon").get<double>();
  if (cfg.contains("delta")) levels.delta = cfg.at("delta").get<double>();
  return levels;
}

awlmi::ProbabilisticOptions probabilistic_options(const json& cfg,
                                                  const CommonFlags& flags) {
  awlmi::ProbabilisticOptions options;
  options.threads = flags.threads;
  if (cfg.value("sequential", false))
    options.mode = awlmi::ProbabilisticOptions::Mode::Sequential;
  options.seq.k_t = cfg.value("k_t", 5);
  options.seq.alpha = cfg.value("alpha", 1.0);
  if (cfg.contains("samples"))
    options.n_override = cfg.at("samples").get<std::int64_t>();
  if (cfg.contains("n_theta"))
    options.n_theta_override = cfg.at("n_theta").get<int>();
  if (cfg.value("common_certificates", false)) options.shared_certificates = true;
  options.solver = solver_from(cfg);
  return options;
}

awlmi::UncertainClosedLoop uncertainty_from(const json& cfg,
                                            const awsys::BenchmarkModel& model) {
  awsys::CircuitUncertainty unc;
  unc.means = awsys::benchmark_circuit_params();
  unc.relative_std = cfg.value("relative_std", 0.10);
  return awlmi::circuit_uncertainty(unc, model.controller, model.u_bar);
}

json config_echo(const json& cfg, const CommonFlags& flags) {
  json echo;
  echo["config"] = cfg;
  echo["seed"] = flags.seed;
  echo["threads"] = flags.threads;
  echo["version"] = SWC_VERSION;
  return echo;
}

void write_gain_curve_csv(const std::filesystem::path& path,
                          const awlmi::GainCurve& curve) {
  std::string text = "s,gamma_hat,feasible\n";
  for (const auto& pt : curve.points) {
    text += format_double(pt.s);
    text += ",";
    text += pt.feasible ? format_double(pt.gamma_hat) : "nan";
    text += ",";
    text += pt.feasible ? "1" : "0";
    text += "\n";
  }
  write_file(path, text);
}

void write_trajectory_csv(const std::filesystem::path& path,
                          const sim::SimResult& run) {
  const int n = run.x.channels();
  std::string text = "t";
  for (int i = 1; i <= n; ++i) text += ",x" + std::to_string(i);
  text += ",u,sigma,z\n";
  for (int k = 0; k < run.x.steps(); ++k) {
    text += format_double(k * run.x.dt);
    for (int i = 0; i < n; ++i) text += "," + format_double(run.x.samples(k, i));
    text += "," + format_double(run.u.samples(k, 0));
    text += "," + format_double(run.sigma.samples(k, 0));
    text += "," + format_double(run.z.samples(k, 0));
    text += "\n";
  }
  write_file(path, text);
}

json iteration_log_json(const scenario::SwcResult& result) {
  json log = json::array();
  for (const auto& it : result.iterations)
    log.push_back({{"k", it.k},
                   {"N_k", it.n_design},
                   {"M_k", it.n_validation},
                   {"objective", it.objective},
                   {"violations", it.violations},
                   {"wall_time_s", it.wall_time_s}});
  return log;
}

void write_iteration_log(const std::filesystem::path& path,
                         const scenario::SwcResult& result) {
  std::string text;
  for (const auto& it : result.iterations) {
    json line{{"k", it.k},         {"N_k", it.n_design},
              {"M_k", it.n_validation}, {"objective", it.objective},
              {"violations", it.violations}, {"wall_time_s", it.wall_time_s}};
    text += line.dump();
    text += "\n";
  }
  write_file(path, text);
}

json design_json(const awlmi::AwDesign& design, double s,
                 const probbounds::ProbLevels& levels, std::int64_t n_used,
                 const json& echo) {
  json out = echo;
  out["s"] = s;
  out["epsilon"] = levels.epsilon;
  out["delta"] = levels.delta;
  out["N"] = n_used;
  out["feasible"] = design.feasible;
  if (design.feasible) {
    out["gamma_hat"] = design.gamma_hat;
    json rows = json::array();
    for (Eigen::Index r = 0; r < design.d_aw.rows(); ++r) {
      json row = json::array();
      for (Eigen::Index c = 0; c < design.d_aw.cols(); ++c)
        row.push_back(design.d_aw(r, c));
      rows.push_back(row);
    }
    out["D_aw"] = rows;
  }
  return out;
}

// ---------------------------------------------------------------------------

int cmd_complexity(double epsilon, double delta, int n_theta, int k_t,
                   double alpha) {
  probbounds::ProbLevels levels{epsilon, delta};
  probbounds::ProbLevels halved{epsilon, delta / 2.0};
  auto exact = probbounds::min_samples_exact(levels, n_theta);
  auto exact_half = probbounds::min_samples_exact(halved, n_theta);
  auto bound = probbounds::min_samples_bound(levels, n_theta);
  auto bound_half = probbounds::min_samples_bound(halved, n_theta);

  std::printf("sample complexity  (epsilon=%g, delta=%g, n_theta=%d)\n", epsilon,
              delta, n_theta);
  std::printf("  exact N  (delta)   : %" PRId64 "\n", exact);
  std::printf("  exact N  (delta/2) : %" PRId64 "\n", exact_half);
  std::printf("  bound N  (delta)   : %" PRId64 "\n", bound);
  std::printf("  bound N  (delta/2) : %" PRId64 "\n", bound_half);

  if (k_t > 1) {
    probbounds::SequentialParams seq{k_t, alpha};
    std::printf("  schedule (k_t=%d, alpha=%g); N_k from bound(delta) and "
                "exact(delta/2)\n",
                k_t, alpha);
    std::printf("  %4s %12s %12s %12s\n", "k", "N_k(bound)", "N_k(exact)", "M_k");
    for (int k = 1; k <= k_t; ++k) {
      std::string mk = "-";
      if (k < k_t)
        mk = std::to_string(probbounds::validation_samples(levels, seq, k));
      std::printf("  %4d %12" PRId64 " %12" PRId64 " %12s\n", k,
                  probbounds::design_schedule(bound, seq, k),
                  probbounds::design_schedule(exact_half, seq, k), mk.c_str());
    }
  }
  return kExitOk;
}

int cmd_analyze(const CommonFlags& flags) {
  static const std::set<std::string> keys{
      "model",   "mode",  "s",     "d_aw",    "epsilon",      "delta",
      "samples", "n_theta", "sequential", "k_t", "alpha", "relative_std",
      "common_certificates", "solver"};
  json cfg = load_config(flags.config_path, keys);
  auto model = load_model(cfg);
  auto cl = awsys::assemble_closed_loop(model.plant, model.controller, model.u_bar);
  double s = cfg.at("s").get<double>();
  auto d_aw = d_aw_from_config(cfg, cl.n_v(), cl.n_u());
  std::string mode = cfg.value("mode", std::string("nominal"));

  json out = config_echo(cfg, flags);
  out["s"] = s;
  bool feasible = false;
  if (mode == "nominal") {
    auto result = awlmi::analyze_nominal(cl, d_aw, s, solver_from(cfg));
    feasible = result.feasible;
    out["mode"] = "nominal";
    out["feasible"] = feasible;
    if (feasible) out["gamma_hat"] = result.gamma_hat;
  } else if (mode == "probabilistic") {
    auto levels = levels_from(cfg, flags);
    auto ucl = uncertainty_from(cfg, model);
    awlmi::AnalysisSpec spec;
    spec.s = s;
    spec.levels = levels;
    auto options = probabilistic_options(cfg, flags);
    auto result = awlmi::swc_analysis(ucl, d_aw, spec, flags.seed, options);
    feasible = result.feasible;
    out["mode"] = "probabilistic";
    out["epsilon"] = levels.epsilon;
    out["delta"] = levels.delta;
    out["N"] = result.run.n_used;
    out["feasible"] = feasible;
    out["iterations"] = iteration_log_json(result.run);
    if (feasible) out["gamma_hat"] = result.gamma_hat;
  } else {
    throw CliError("mode must be \"nominal\" or \"probabilistic\"");
  }

  std::filesystem::create_directories(flags.out_dir);
  write_file(std::filesystem::path(flags.out_dir) / "analysis.json",
             out.dump(2) + "\n");
  return feasible ? kExitOk : kExitInfeasible;
}

int cmd_synthesize(const CommonFlags& flags) {
  static const std::set<std::string> keys{
      "model",   "mode",  "s",     "epsilon", "delta",        "samples",
      "n_theta", "sequential", "k_t", "alpha", "relative_std",
      "common_certificates", "solver"};
  json cfg = load_config(flags.config_path, keys);
  auto model = load_model(cfg);
  auto cl = awsys::assemble_closed_loop(model.plant, model.controller, model.u_bar);
  double s = cfg.at("s").get<double>();
  std::string mode = cfg.value("mode", std::string("nominal"));
  auto levels = levels_from(cfg, flags);
  json echo = config_echo(cfg, flags);

  awlmi::AwDesign design;
  std::int64_t n_used = 0;
  scenario::SwcResult run;
  if (mode == "nominal") {
    design = awlmi::synthesize_nominal(cl, s, solver_from(cfg));
  } else if (mode == "probabilistic") {
    auto ucl = uncertainty_from(cfg, model);
    awlmi::AnalysisSpec spec;
    spec.s = s;
    spec.levels = levels;
    auto options = probabilistic_options(cfg, flags);
    auto result = awlmi::swc_synthesis(ucl, spec, flags.seed, options);
    design = result.design;
    run = result.run;
    n_used = result.run.n_used;
  } else {
    throw CliError("mode must be \"nominal\" or \"probabilistic\"");
  }

  std::filesystem::create_directories(flags.out_dir);
  json out = design_json(design, s, levels, n_used, echo);
  out["mode"] = mode;
  if (mode == "probabilistic") out["iterations"] = iteration_log_json(run);
  write_file(std::filesystem::path(flags.out_dir) / "design.json",
             out.dump(2) + "\n");
  return design.feasible ? kExitOk : kExitInfeasible;
}

int cmd_gaincurve(const CommonFlags& flags) {
  static const std::set<std::string> keys{
      "model",   "mode",  "s_grid", "d_aw",    "epsilon",      "delta",
      "samples", "n_theta", "sequential", "k_t", "alpha", "relative_std",
      "common_certificates", "solver"};
  json cfg = load_config(flags.config_path, keys);
  auto model = load_model(cfg);
  auto cl = awsys::assemble_closed_loop(model.plant, model.controller, model.u_bar);
  auto grid = cfg.at("s_grid").get<std::vector<double>>();
  auto d_aw = d_aw_from_config(cfg, cl.n_v(), cl.n_u());
  std::string mode = cfg.value("mode", std::string("nominal"));

  awlmi::GainCurve curve;
  if (mode == "nominal") {
    curve = awlmi::gain_curve(cl, d_aw, grid, solver_from(cfg), flags.threads);
  } else if (mode == "probabilistic") {
    auto levels = levels_from(cfg, flags);
    auto ucl = uncertainty_from(cfg, model);
    curve = awlmi::gain_curve_probabilistic(ucl, d_aw, grid, levels, flags.seed,
                                            probabilistic_options(cfg, flags));
  } else {
    throw CliError("mode must be \"nominal\" or \"probabilistic\"");
  }

  std::filesystem::create_directories(flags.out_dir);
  write_gain_curve_csv(std::filesystem::path(flags.out_dir) / "gaincurve.csv",
                       curve);
  write_file(std::filesystem::path(flags.out_dir) / "gaincurve.json",
             config_echo(cfg, flags).dump(2) + "\n");
  bool any_feasible = false;
  for (const auto& pt : curve.points) any_feasible |= pt.feasible;
  return any_feasible ? kExitOk : kExitInfeasible;
}

int cmd_simulate(const CommonFlags& flags) {
  static const std::set<std::string> keys{"model", "d_aw", "amplitude", "t_end",
                                          "dt"};
  json cfg = load_config(flags.config_path, keys);
  auto model = load_model(cfg);
  auto cl = awsys::assemble_closed_loop(model.plant, model.controller, model.u_bar);
  auto d_aw = d_aw_from_config(cfg, cl.n_v(), cl.n_u());
  const double amplitude = cfg.value("amplitude", 0.05);
  const double t_end = cfg.value("t_end", 20.0);
  const double dt = cfg.value("dt", 1e-3);

  sim::Signal w;
  w.dt = dt;
  int n = static_cast<int>(std::llround(t_end / dt));
  w.samples = sim::Matrix::Constant(n + 1, cl.n_w(), amplitude);
  sim::SimOptions options;
  options.dt = dt;
  auto run = sim::simulate(cl, d_aw, w, sim::Vector::Zero(cl.n()), t_end, options);

  std::filesystem::create_directories(flags.out_dir);
  write_trajectory_csv(std::filesystem::path(flags.out_dir) / "trajectory.csv",
                       run);
  write_file(std::filesystem::path(flags.out_dir) / "simulate.json",
             config_echo(cfg, flags).dump(2) + "\n");
  return kExitOk;
}

int cmd_benchmark(const CommonFlags& flags) {
  static const std::set<std::string> keys{
      "epsilon", "delta",  "k_t",       "alpha", "relative_std", "s",
      "s_grid",  "samples", "sequential", "amplitude", "t_end",  "dt",
      "solver"};
  json cfg = flags.config_path.empty()
                 ? json{{"schema", 1}}
                 : load_config(flags.config_path, keys);

  auto [plant, controller] = awsys::benchmark_nominal();
  awsys::BenchmarkModel model{plant, controller, awsys::Vector::Ones(1)};
  auto cl = awsys::assemble_closed_loop(plant, controller, model.u_bar);
  auto levels = levels_from(cfg, flags);
  auto ucl = uncertainty_from(cfg, model);
  const double s = cfg.value("s", 0.003);
  std::vector<double> grid =
      cfg.value("s_grid", std::vector<double>{0.002, 0.004, 0.007, 0.011, 0.016});
  json echo = config_echo(cfg, flags);
  std::filesystem::create_directories(flags.out_dir);
  const std::filesystem::path out(flags.out_dir);

  // designs
  auto nominal_design = awlmi::synthesize_nominal(cl, s);
  if (!nominal_design.feasible) {
    std::fprintf(stderr, "nominal synthesis infeasible at s=%g\n", s);
    return kExitInfeasible;
  }
  write_file(out / "nominal_design.json",
             design_json(nominal_design, s, levels, 0, echo).dump(2) + "\n");

  awlmi::AnalysisSpec spec;
  spec.s = s;
  spec.levels = levels;
  auto options = probabilistic_options(cfg, flags);
  auto robust = awlmi::swc_synthesis(ucl, spec, flags.seed, options);
  if (!robust.design.feasible) {
    std::fprintf(stderr, "randomized synthesis failed at s=%g\n", s);
    return kExitInfeasible;
  }
  write_file(out / "robust_design.json",
             design_json(robust.design, s, levels, robust.run.n_used, echo)
                     .dump(2) +
                 "\n");
  write_iteration_log(out / "robust_design_log.jsonl", robust.run);

  // gain curves: nominal and randomized analysis of both designs
  rng::Stream curve_seeds(flags.seed);
  write_gain_curve_csv(out / "curve_nominal_daw_nominal.csv",
                       awlmi::gain_curve(cl, nominal_design.d_aw, grid, {},
                                         flags.threads));
  write_gain_curve_csv(out / "curve_nominal_daw_robust.csv",
                       awlmi::gain_curve(cl, robust.design.d_aw, grid, {},
                                         flags.threads));
  write_gain_curve_csv(
      out / "curve_robust_daw_nominal.csv",
      awlmi::gain_curve_probabilistic(ucl, nominal_design.d_aw, grid, levels,
                                      curve_seeds.split(1).next_u64(), options));
  write_gain_curve_csv(
      out / "curve_robust_daw_robust.csv",
      awlmi::gain_curve_probabilistic(ucl, robust.design.d_aw, grid, levels,
                                      curve_seeds.split(2).next_u64(), options));

  // time responses: no anti-windup, nominal gain, randomized gain
  const double amplitude = cfg.value("amplitude", 0.05);
  const double t_end = cfg.value("t_end", 20.0);
  const double dt = cfg.value("dt", 1e-3);
  sim::Signal w;
  w.dt = dt;
  int n = static_cast<int>(std::llround(t_end / dt));
  w.samples = sim::Matrix::Constant(n + 1, 1, amplitude);
  sim::SimOptions sim_options;
  sim_options.dt = dt;
  auto x0 = sim::Vector::Zero(cl.n());
  write_trajectory_csv(out / "traj_noaw.csv",
                       sim::simulate(cl, awlmi::Matrix::Zero(3, 1), w, x0, t_end,
                                     sim_options));
  write_trajectory_csv(out / "traj_nominal_aw.csv",
                       sim::simulate(cl, nominal_design.d_aw, w, x0, t_end,
                                     sim_options));
  write_trajectory_csv(out / "traj_robust_aw.csv",
                       sim::simulate(cl, robust.design.d_aw, w, x0, t_end,
                                     sim_options));

  json summary = echo;
  summary["s"] = s;
  summary["epsilon"] = levels.epsilon;
  summary["delta"] = levels.delta;
  summary["nominal_gamma_hat"] = nominal_design.gamma_hat;
  summary["robust_gamma_hat"] = robust.design.gamma_hat;
  summary["robust_samples_used"] = robust.run.n_used;
  write_file(out / "summary.json", summary.dump(2) + "\n");
  return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"randomized robust anti-windup synthesis toolkit"};
  app.require_subcommand(1);

  double epsilon = 0.1, delta = 1e-3, alpha = 1.0;
  int n_theta = 1, k_t = 0;
  auto* complexity = app.add_subcommand(
      "complexity", "sample-complexity table for the randomized programs");
  complexity->add_option("--epsilon", epsilon, "accuracy level in (0,1)")
      ->required()
      ->check(CLI::Range(1e-12, 1.0 - 1e-12));
  complexity->add_option("--delta", delta, "confidence level in (0,1)")
      ->required()
      ->check(CLI::Range(1e-15, 1.0 - 1e-12));
  complexity->add_option("--ntheta", n_theta, "design variable count")
      ->required()
      ->check(CLI::PositiveNumber);
  complexity->add_option("--kt", k_t, "sequential iteration count");
  complexity->add_option("--alpha", alpha, "hyperharmonic exponent");

  CommonFlags flags;
  auto add_common = [&](CLI::App* cmd, bool config_required) {
    auto* opt = cmd->add_option("--config", flags.config_path, "run config (JSON)");
    if (config_required) opt->required();
    cmd->add_option("--out", flags.out_dir, "output directory");
    cmd->add_option("--seed", flags.seed, "random seed");
    cmd->add_option("--threads", flags.threads, "worker cap");
    cmd->add_flag("--paper-scale", flags.paper_scale,
                  "use epsilon=0.01, delta=1e-6 (very expensive)");
  };

  auto* analyze = app.add_subcommand("analyze", "regional gain analysis");
  add_common(analyze, true);
  auto* synthesize = app.add_subcommand("synthesize", "anti-windup gain design");
  add_common(synthesize, true);
  auto* gaincurve = app.add_subcommand("gaincurve", "gain curve over an s grid");
  add_common(gaincurve, true);
  auto* simulate = app.add_subcommand("simulate", "saturated time response");
  add_common(simulate, true);
  auto* benchmark =
      app.add_subcommand("benchmark", "full pipeline on the built-in network");
  add_common(benchmark, false);

  CLI11_PARSE(app, argc, argv);

  try {
    if (complexity->parsed()) return cmd_complexity(epsilon, delta, n_theta, k_t, alpha);
    if (analyze->parsed()) return cmd_analyze(flags);
    if (synthesize->parsed()) return cmd_synthesize(flags);
    if (gaincurve->parsed()) return cmd_gaincurve(flags);
    if (simulate->parsed()) return cmd_simulate(flags);
    if (benchmark->parsed()) return cmd_benchmark(flags);
  } catch (const CliError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitError;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitError;
  }
  return kExitError;
}
