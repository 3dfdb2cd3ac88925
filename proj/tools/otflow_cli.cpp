#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "otflow/error.hpp"
#include "otflow/lp_oracle.hpp"
#include "otflow/suite.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace otflow;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitSolver = 3;
constexpr double kLpAgreement = 2e-2;
constexpr double kConstantSpeedTol = 1e-2;
constexpr double kMassTol = 1e-10;

struct Options {
  RunConfig config;
  std::optional<double> lambda;
  std::string out_dir = "otflow_out";
  int parallel = 1;
};

// --config is applied before the flags so that explicit flags override it.
RunConfig preload_config(int argc, char** argv) {
  RunConfig config;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    std::string path;
    if (arg == "--config" && i + 1 < argc) path = argv[i + 1];
    else if (arg.rfind("--config=", 0) == 0) path = arg.substr(9);
    if (path.empty()) continue;
    std::ifstream in(path);
    if (!in) throw InvalidArgument(fmt::format("cannot open config file '{}'", path));
    json j;
    try {
      in >> j;
    } catch (const json::exception& e) {
      throw InvalidArgument(fmt::format("config file '{}': {}", path, e.what()));
    }
    config = RunConfig::from_json(j, config);
  }
  return config;
}

void add_common(CLI::App* sub, Options& o) {
  RunConfig& c = o.config;
  sub->add_option("--config", "JSON file with run settings; explicit flags take precedence");
  sub->add_option("--manifold", c.manifold, "circle:N[:L], torus:N or torus:NxM, sphere:NTxNP")->capture_default_str();
  sub->add_option("--entropy", c.entropy, "log or power:m=<real>")->capture_default_str();
  sub->add_option("--lambda", o.lambda, "curvature bound used by the checks (default: the grid's)");
  sub->add_option("--mu0", c.mu0, "first density generator")->capture_default_str();
  sub->add_option("--mu1,--nu", c.mu1, "second density generator")->capture_default_str();
  sub->add_option("--t", c.t, "flow time")->capture_default_str();
  sub->add_option("--t0", c.t0, "start of the time interval")->capture_default_str();
  sub->add_option("--t1", c.t1, "end of the time interval")->capture_default_str();
  sub->add_option("--s", c.s, "path parameter for the action checks")->capture_default_str();
  sub->add_option("--s-samples", c.s_samples, "path parameters for the convexity check");
  sub->add_option("--slices", c.slices, "number of s-intervals K")->capture_default_str();
  sub->add_option("--gamma", c.gamma, "proximal step of the transport solver")->capture_default_str();
  sub->add_option("--dr-tolerance", c.dr_tolerance, "transport stopping tolerance")->capture_default_str();
  sub->add_option("--max-iter", c.max_iter, "transport iteration cap")->capture_default_str();
  sub->add_option("--dt", c.dt, "diffusion time step (0: command default)")->capture_default_str();
  sub->add_option("--min-steps", c.min_steps, "steps per evolution inside checks when --dt is 0")
      ->capture_default_str();
  sub->add_option("--check-tolerance", c.check_tolerance, "relative check tolerance (0: 5e-3 flat, 5e-2 sphere)")
      ->capture_default_str();
  sub->add_option("--eps", c.eps, "reparametrization smoothing")->capture_default_str();
  sub->add_option("--seed", c.seed, "seed of the random test fields")->capture_default_str();
  sub->add_option("--dim", c.dim, "dimension of the McCann conditions (0: manifold dimension)")
      ->capture_default_str();
  sub->add_option("--save-every", c.save_every, "trajectory export stride")->capture_default_str();
  sub->add_option("--out", o.out_dir, "output directory (OTFLOW_OUT overrides)")->capture_default_str();
}

std::string output_dir(const Options& o) {
  if (const char* env = std::getenv("OTFLOW_OUT"); env != nullptr && *env != '\0') return env;
  return o.out_dir;
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(fmt::format("cannot write '{}'", path.string()));
  out << text;
}

// Writes <command>.json and <command>.csv, prints one line per report and
// returns the exit status.
int finish(const Options& o, const std::string& command, const std::vector<CheckReport>& reports,
           const json& results = json::object(), bool solver_failure = false) {
  const std::string digest = o.config.digest();
  json doc;
  doc["command"] = command;
  doc["config"] = o.config.to_json();
  doc["config_digest"] = digest;
  doc["results"] = results;
  json list = json::array();
  bool all_pass = true;
  for (const auto& r : reports) {
    json item = to_json(r);
    item["config_digest"] = digest;
    list.push_back(item);
    all_pass = all_pass && r.pass;
  }
  doc["reports"] = list;
  doc["pass"] = all_pass && !solver_failure;
  const fs::path dir = output_dir(o);
  fs::create_directories(dir);
  write_file(dir / (command + ".json"), doc.dump(2) + "\n");
  write_file(dir / (command + ".csv"), reports_csv(reports));
  for (const auto& r : reports)
    fmt::print("{} {} slack={} tolerance={}\n", r.pass ? "PASS" : "FAIL", r.name, format_double(r.slack),
               format_double(r.tolerance));
  if (solver_failure) return kExitSolver;
  return all_pass ? 0 : 1;
}

json diagnostics_json(const TransportDiagnostics& d) {
  return {{"iterations", d.iterations},
          {"converged", d.converged},
          {"momentum_action", d.momentum_action},
          {"continuity_residual", d.continuity_residual},
          {"floor_hits", d.floor_hits},
          {"min_density", d.min_density}};
}

int run_w2(const Options& o) {
  const auto grid = o.config.grid();
  const DensityField mu0 = make_density(*grid, o.config.mu0);
  const DensityField mu1 = make_density(*grid, o.config.mu1);
  const TransportPath path = solve_w2(*grid, mu0, mu1, o.config.transport());
  const double w2 = std::sqrt(path.w2_sq_estimate);
  json results = {{"w2", w2}, {"w2_sq", path.w2_sq_estimate}, {"diagnostics", diagnostics_json(path.diagnostics)}};
  std::vector<CheckReport> reports;
  if (grid->size() <= kLpOracleMaxNodes) {
    const LpW2 lp = lp_w2_oracle(*grid, mu0, mu1);
    results["lp"] = {{"w2", lp.w2}, {"duality_gap", lp.duality_gap}, {"pivots", lp.pivots}};
    CheckReport r;
    r.name = "dynamic_vs_lp";
    r.property = "|W2(dynamic) - W2(LP)| / W2(LP) <= 2e-2";
    r.inputs_digest = Digest().add(grid->spec().str()).add(mu0).add(mu1).hex();
    r.slack = lp.w2 > 0.0 ? kLpAgreement - std::abs(w2 - lp.w2) / lp.w2 : kLpAgreement - w2;
    r.tolerance = 0.0;
    r.measured["w2_dynamic"] = w2;
    r.measured["w2_lp"] = lp.w2;
    r.finalize();
    reports.push_back(r);
  }
  fs::create_directories(output_dir(o));
  write_file(fs::path(output_dir(o)) / "w2_path.csv", path_csv(*grid, path));
  fmt::print("w2 = {}\n", format_double(w2));
  return finish(o, "w2", reports, results);
}

int run_geodesic(const Options& o) {
  const auto grid = o.config.grid();
  const DensityField mu0 = make_density(*grid, o.config.mu0);
  const DensityField mu1 = make_density(*grid, o.config.mu1);
  const TransportPath raw = solve_w2(*grid, mu0, mu1, o.config.transport());
  double length = 0.0;
  reparametrization_times(raw.s_nodes, raw.action_per_s, o.config.eps, {1.0}, &length);
  const TransportPath path = reparametrize(*grid, raw, o.config.eps);
  const std::vector<double> speed = action(*grid, path);
  double mean = 0.0;
  for (double a : speed) mean += a / speed.size();
  double deviation = 0.0;
  for (double a : speed) deviation = std::max(deviation, mean > 0.0 ? std::abs(a - mean) / mean : std::abs(a));
  CheckReport r;
  r.name = "constant_speed";
  r.property = "per-slice action of the reparametrized path is constant within 1%";
  r.inputs_digest = Digest().add(grid->spec().str()).add(mu0).add(mu1).add(o.config.eps).hex();
  r.slack = kConstantSpeedTol - deviation;
  r.tolerance = 0.0;
  r.measured["max_relative_deviation"] = deviation;
  r.measured["length"] = length;
  r.finalize();
  json results = {{"w2_sq", raw.w2_sq_estimate},
                  {"length", length},
                  {"action_raw", raw.action_per_s},
                  {"action_reparametrized", speed},
                  {"diagnostics", diagnostics_json(raw.diagnostics)}};
  fs::create_directories(output_dir(o));
  write_file(fs::path(output_dir(o)) / "geodesic_path.csv", path_csv(*grid, path));
  return finish(o, "geodesic", {r}, results);
}

int run_flow(const Options& o) {
  const auto grid = o.config.grid();
  const EntropyModel model = o.config.model();
  const DensityField rho0 = make_density(*grid, o.config.mu0);
  const double dt = o.config.dt > 0.0 ? o.config.dt : default_dt(*grid, model, rho0);
  const DiffusionTrajectory traj = evolve(*grid, model, rho0, o.config.t, dt, o.config.save_every);
  std::map<double, double> trace;
  for (const auto& rec : traj.log) trace[rec.t] = rec.entropy;
  CheckReport mono = check_monotonicity_lemma(trace);
  mono.name = "entropy_monotonicity";
  mono.property = "entropy is nonincreasing along the flow";
  CheckReport mass;
  mass.name = "mass_conservation";
  mass.property = "|mass - 1| <= 1e-10 at every step";
  mass.kind = CheckKind::identity;
  mass.inputs_digest = Digest().add(grid->spec().str()).add(model.str()).add(rho0).add(dt).hex();
  mass.slack = traj.max_mass_error();
  mass.tolerance = kMassTol;
  mass.measured["min_density"] = traj.min_density();
  mass.finalize();
  json results = {{"dt", dt},
                  {"steps", static_cast<int>(traj.log.size()) - 1},
                  {"final_entropy", traj.log.back().entropy},
                  {"min_density", traj.min_density()},
                  {"max_mass_error", traj.max_mass_error()}};
  fs::create_directories(output_dir(o));
  write_file(fs::path(output_dir(o)) / "trajectory.csv", trajectory_csv(*grid, traj));
  return finish(o, "flow", {mono, mass}, results);
}

int run_named(const Options& o, const std::string& command, const std::vector<std::string>& labels) {
  std::vector<NamedCheck> selected;
  for (auto& check : suite_checks(o.config))
    if (std::find(labels.begin(), labels.end(), check.label) != labels.end()) selected.push_back(std::move(check));
  const RunOutcome outcome = run_checks(selected, o.parallel);
  return finish(o, command, outcome.reports, json::object(), outcome.solver_failure);
}

int run_mccann(const Options& o) {
  const int n = o.config.dim > 0 ? o.config.dim : o.config.grid()->dim();
  return finish(o, "mccann-check", {check_mccann(o.config.model(), n)});
}

int dispatch(const std::string& command, const Options& o) {
  if (command == "w2") return run_w2(o);
  if (command == "geodesic") return run_geodesic(o);
  if (command == "flow") return run_flow(o);
  if (command == "mccann-check") return run_mccann(o);
  if (command == "evi-check") return run_named(o, command, {"evi_integral", "evi_differential"});
  if (command == "convexity-check") return run_named(o, command, {"displacement_convexity"});
  if (command == "contraction-check") return run_named(o, command, {"contraction"});
  if (command == "action-identity") return run_named(o, command, {"action_identity", "lambda_action_inequality"});
  if (command == "bochner-check") return run_named(o, command, {"bochner_identity", "hessian_trace_bound"});
  const RunOutcome outcome = run_checks(suite_checks(o.config), o.parallel);
  return finish(o, "suite", outcome.reports, json::object(), outcome.solver_failure);
}

}  // namespace

int main(int argc, char** argv) {
  Options o;
  try {
    o.config = preload_config(argc, argv);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  CLI::App app{"Dynamic optimal transport, diffusion flows and their variational inequalities"};
  app.require_subcommand(1, 1);
  const std::vector<std::pair<std::string, std::string>> commands = {
      {"w2", "dynamic W2 between --mu0 and --mu1, with the LP cross-check on small grids"},
      {"geodesic", "constant-speed geodesic between --mu0 and --mu1"},
      {"flow", "evolve --mu0 for time --t and export the trajectory"},
      {"evi-check", "integral and differential evolution variational inequality"},
      {"convexity-check", "displacement convexity of the entropy along the geodesic"},
      {"contraction-check", "contraction of the flow in W2"},
      {"action-identity", "action derivative identity and lambda-action inequality along the mixture path"},
      {"bochner-check", "Bochner identity and trace bound on a random smooth field"},
      {"mccann-check", "McCann conditions of the entropy in dimension --dim"},
      {"suite", "the full battery of checks"},
  };
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    add_common(sub, o);
    if (name == "suite") sub->add_option("--parallel", o.parallel, "worker threads")->capture_default_str();
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }
  o.config.lambda = o.lambda ? o.lambda : o.config.lambda;
  const std::string command = app.get_subcommands().front()->get_name();
  try {
    return dispatch(command, o);
  } catch (const InvalidArgument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const SolverFailure& e) {
    std::cerr << "solver failure: " << e.what() << "\n";
    CheckReport r;
    r.name = command;
    r.property = "solver failure";
    r.slack = std::numeric_limits<double>::quiet_NaN();
    r.notes.push_back(e.what());
    try {
      finish(o, command, {r}, json::object(), true);
    } catch (const std::exception&) {
    }
    return kExitSolver;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitSolver;
  }
}
