#include "otflow/suite.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numbers>
#include <random>
#include <thread>

#include <fmt/format.h>

#include "otflow/error.hpp"

namespace otflow {
namespace {

constexpr double kRoundoffBudget = 1e-12;
constexpr int kPowerActionSteps = 1024;
constexpr double kSemigroupSplit = 0.37;

template <class T>
T read(const nlohmann::json& value, const std::string& key) {
  try {
    return value.get<T>();
  } catch (const nlohmann::json::exception&) {
    throw InvalidArgument(fmt::format("config: key '{}' has the wrong type", key));
  }
}

double coefficient(std::mt19937_64& rng) { return 2.0 * unit_uniform(rng) - 1.0; }

}  // namespace

RunConfig RunConfig::from_json(const nlohmann::json& j, const RunConfig& base) {
  if (!j.is_object()) throw InvalidArgument("config: expected a JSON object");
  RunConfig c = base;
  for (const auto& [key, value] : j.items()) {
    if (key == "manifold") c.manifold = read<std::string>(value, key);
    else if (key == "entropy") c.entropy = read<std::string>(value, key);
    else if (key == "lambda") c.lambda = value.is_null() ? std::nullopt : std::optional(read<double>(value, key));
    else if (key == "mu0") c.mu0 = read<std::string>(value, key);
    else if (key == "mu1") c.mu1 = read<std::string>(value, key);
    else if (key == "t") c.t = read<double>(value, key);
    else if (key == "t0") c.t0 = read<double>(value, key);
    else if (key == "t1") c.t1 = read<double>(value, key);
    else if (key == "s") c.s = read<double>(value, key);
    else if (key == "s_samples") c.s_samples = read<std::vector<double>>(value, key);
    else if (key == "slices") c.slices = read<int>(value, key);
    else if (key == "gamma") c.gamma = read<double>(value, key);
    else if (key == "dr_tolerance") c.dr_tolerance = read<double>(value, key);
    else if (key == "max_iter") c.max_iter = read<int>(value, key);
    else if (key == "dt") c.dt = read<double>(value, key);
    else if (key == "min_steps") c.min_steps = read<int>(value, key);
    else if (key == "check_tolerance") c.check_tolerance = read<double>(value, key);
    else if (key == "eps") c.eps = read<double>(value, key);
    else if (key == "seed") c.seed = read<std::uint64_t>(value, key);
    else if (key == "dim") c.dim = read<int>(value, key);
    else if (key == "save_every") c.save_every = read<int>(value, key);
    else throw InvalidArgument(fmt::format("config: unknown key '{}'", key));
  }
  return c;
}

nlohmann::json RunConfig::to_json() const {
  return nlohmann::json{
      {"manifold", manifold},
      {"entropy", entropy},
      {"lambda", lambda ? nlohmann::json(*lambda) : nlohmann::json(nullptr)},
      {"mu0", mu0},
      {"mu1", mu1},
      {"t", t},
      {"t0", t0},
      {"t1", t1},
      {"s", s},
      {"s_samples", s_samples},
      {"slices", slices},
      {"gamma", gamma},
      {"dr_tolerance", dr_tolerance},
      {"max_iter", max_iter},
      {"dt", dt},
      {"min_steps", min_steps},
      {"check_tolerance", check_tolerance},
      {"eps", eps},
      {"seed", seed},
      {"dim", dim},
      {"save_every", save_every},
  };
}

std::string RunConfig::digest() const { return Digest().add(to_json().dump()).hex(); }

std::shared_ptr<const ManifoldGrid> RunConfig::grid() const {
  return std::make_shared<const ManifoldGrid>(build_grid(ManifoldSpec::parse(manifold)));
}

EntropyModel RunConfig::model() const { return EntropyModel::parse(entropy); }

TransportParams RunConfig::transport() const {
  TransportParams p;
  p.slices = slices;
  p.gamma = gamma;
  p.tolerance = dr_tolerance;
  p.max_iter = max_iter;
  return p;
}

FlowCheckContext RunConfig::context() const {
  FlowCheckContext ctx = FlowCheckContext::make(grid(), model(), lambda);
  ctx.dt = dt;
  ctx.min_steps = min_steps;
  ctx.transport = transport();
  ctx.tolerance.override_value = check_tolerance;
  return ctx;
}

CheckReport check_bochner(const ManifoldGrid& grid, const ScalarField& f, double tolerance) {
  CheckReport report;
  report.name = "bochner_identity";
  report.property = "<grad f, grad lap f> - 1/2 lap |grad f|^2 = -|Hess f|^2 - Ric(grad f, grad f) at every node";
  report.kind = CheckKind::identity;
  report.inputs_digest = Digest().add(grid.spec().str()).add(f).hex();
  const ScalarField residual = bochner_residual(grid, f);
  Eigen::Index worst = 0;
  const double max_abs = residual.cwiseAbs().maxCoeff(&worst);
  const double l2 = grid.norm(residual);
  report.slack = grid.is_flat() ? max_abs : l2;
  report.tolerance = tolerance;
  report.measured["max_abs_residual"] = max_abs;
  report.measured["l2_residual"] = l2;
  report.measured["worst_node"] = static_cast<double>(worst);
  const ScalarField hess = hessian_norm_sq(grid, f);
  report.measured["max_hessian_norm_sq"] = hess.maxCoeff();
  report.measured["l2_hessian_norm_sq"] = grid.norm(hess);
  if (!grid.is_flat()) report.notes.push_back("sphere: weighted L2 norm of the residual");
  report.finalize();
  return report;
}

CheckReport check_hessian_trace_bound(const ManifoldGrid& grid, const ScalarField& f, double tolerance) {
  CheckReport report;
  report.name = "hessian_trace_bound";
  report.property = "(lap f)^2 <= n |Hess f|^2 at every node";
  report.inputs_digest = Digest().add(grid.spec().str()).add(f).hex();
  const ScalarField lap = laplacian(grid, f);
  const ScalarField margin = grid.dim() * hessian_norm_sq(grid, f) - lap.cwiseProduct(lap);
  Eigen::Index worst = 0;
  report.slack = margin.minCoeff(&worst);
  report.tolerance = tolerance;
  report.measured["worst_node"] = static_cast<double>(worst);
  report.measured["n"] = grid.dim();
  report.finalize();
  return report;
}

ScalarField smooth_test_field(const ManifoldGrid& grid, std::uint64_t seed, int max_mode) {
  std::mt19937_64 rng(seed);
  if (!grid.is_flat()) {
    double c[10];
    for (double& v : c) v = coefficient(rng);
    return sample(grid, [&](const auto& p) {
      const double x = std::sin(p[0]) * std::cos(p[1]);
      const double y = std::sin(p[0]) * std::sin(p[1]);
      const double z = std::cos(p[0]);
      return c[0] + c[1] * x + c[2] * y + c[3] * z + c[4] * x * y + c[5] * y * z + c[6] * x * z + c[7] * x * x +
             c[8] * y * y + c[9] * z * z;
    });
  }
  const int resolution = grid.dim() == 2 ? std::min(grid.rows(), grid.cols()) : grid.cols();
  int modes = std::max(1, (resolution + 3) / 4);
  if (max_mode > 0) modes = std::min(modes, max_mode + 1);
  const double k0 = 2.0 * std::numbers::pi / grid.spec().side;
  ScalarField f = ScalarField::Zero(grid.size());
  const int ky_max = grid.dim() == 2 ? modes : 1;
  for (int kx = 0; kx < modes; ++kx) {
    for (int ky = 0; ky < ky_max; ++ky) {
      double a[4];
      for (double& v : a) v = coefficient(rng);
      f += sample(grid, [&](const auto& p) {
        const double u = k0 * kx * p[0];
        const double v = grid.dim() == 2 ? k0 * ky * p[1] : 0.0;
        return a[0] * std::cos(u) * std::cos(v) + a[1] * std::sin(u) * std::cos(v) +
               a[2] * std::cos(u) * std::sin(v) + a[3] * std::sin(u) * std::sin(v);
      });
    }
  }
  return f;
}

TransportPath mixture_path(const ManifoldGrid& grid, const DensityField& mu0, const DensityField& mu1, int slices) {
  if (slices < 2) throw InvalidArgument("mixture_path: need at least 2 slices");
  TransportPath path;
  ScalarField drho = mu1 - mu0;
  drho.array() -= grid.integrate(drho) / grid.volume();
  for (int k = 0; k <= slices; ++k) {
    const double s = static_cast<double>(k) / slices;
    path.s_nodes.push_back(s);
    path.rho.push_back((1.0 - s) * mu0 + s * mu1);
    path.phi.push_back(solve_potential(grid, path.rho.back(), drho));
  }
  path.action_per_s = action(grid, path);
  path.w2_sq_estimate = total_action(path);
  return path;
}

std::vector<NamedCheck> suite_checks(const RunConfig& config) {
  const FlowCheckContext ctx = config.context();
  const ManifoldGrid& g = ctx.g();
  const DensityField mu0 = make_density(g, config.mu0);
  const DensityField mu1 = make_density(g, config.mu1);
  const double rel = ctx.relative_tolerance();
  std::vector<NamedCheck> checks;
  checks.push_back({"mccann_conditions", [ctx, config] {
                      return check_mccann(ctx.model, config.dim > 0 ? config.dim : ctx.g().dim());
                    }});
  const ScalarField f = smooth_test_field(g, config.seed);
  // Flat operators are spectral, so the budget is roundoff relative to the
  // size of the terms; sphere operators are second order.
  const ScalarField hess = hessian_norm_sq(g, f);
  const double scale = std::max(1.0, g.is_flat() ? hess.cwiseAbs().maxCoeff() : g.norm(hess));
  const double identity_tol = (g.is_flat() ? kRoundoffBudget : rel) * scale;
  const double trace_tol = (g.is_flat() ? kRoundoffBudget : rel) * std::max(1.0, hess.cwiseAbs().maxCoeff());
  checks.push_back({"bochner_identity", [ctx, f, identity_tol] { return check_bochner(ctx.g(), f, identity_tol); }});
  checks.push_back({"hessian_trace_bound", [ctx, f, trace_tol] {
                      return check_hessian_trace_bound(ctx.g(), f, trace_tol);
                    }});
  checks.push_back({"semigroup", [ctx, mu0, config] {
                      // An uneven split, so the two runs take different step sizes.
                      const double dt = ctx.time_step(config.t);
                      return check_semigroup(ctx.g(), ctx.model, mu0, kSemigroupSplit * config.t,
                                             (1.0 - kSemigroupSplit) * config.t, dt, ctx.diffusion);
                    }});
  checks.push_back({"entropy_monotonicity", [ctx, mu0, config] {
                      const DiffusionTrajectory traj = evolve(ctx.g(), ctx.model, mu0, config.t,
                                                              ctx.time_step(config.t), 1, ctx.diffusion);
                      std::map<double, double> trace;
                      for (const auto& rec : traj.log) trace[rec.t] = rec.entropy;
                      CheckReport r = check_monotonicity_lemma(trace);
                      r.name = "entropy_monotonicity";
                      r.property = "entropy is nonincreasing along the flow";
                      return r;
                    }});
  checks.push_back({"evi_integral", [ctx, mu0, mu1, config] {
                      return check_evi_integral(ctx, mu0, mu1, config.t0, config.t1);
                    }});
  checks.push_back(
      {"evi_differential", [ctx, mu0, mu1, config] { return check_evi_differential(ctx, mu0, mu1, config.t); }});
  checks.push_back({"contraction", [ctx, mu0, mu1, config] { return check_contraction(ctx, mu0, mu1, config.t); }});
  checks.push_back(
      {"regularization", [ctx, mu0, mu1, config] { return check_regularization(ctx, mu0, mu1, config.t); }});
  checks.push_back({"uniform_continuity", [ctx, mu0, config] {
                      return check_uniform_continuity(ctx, mu0, config.t0, config.t1);
                    }});
  checks.push_back({"displacement_convexity", [ctx, mu0, mu1, config] {
                      return check_displacement_convexity(ctx, mu0, mu1, config.s_samples);
                    }});
  // Backward Euler is first order: the time differences of the action need
  // finer steps than the other checks for power models.
  FlowCheckContext action_ctx = ctx;
  if (ctx.model.kind() == EntropyKind::power && config.dt == 0.0)
    action_ctx.min_steps = std::max(ctx.min_steps, kPowerActionSteps);
  checks.push_back({"action_identity", [action_ctx, mu0, mu1, config] {
                      return action_identity(action_ctx, mixture_path(action_ctx.g(), mu0, mu1, config.slices),
                                             config.t, config.s);
                    }});
  if (ctx.model.kind() == EntropyKind::log) {
    checks.push_back({"lambda_action_inequality", [ctx, mu0, mu1, config] {
                        return check_lambda_action_inequality(ctx, mixture_path(ctx.g(), mu0, mu1, config.slices),
                                                              config.t, config.s);
                      }});
  }
  return checks;
}

int RunOutcome::exit_code() const {
  if (solver_failure) return 3;
  return std::all_of(reports.begin(), reports.end(), [](const CheckReport& r) { return r.pass; }) ? 0 : 1;
}

RunOutcome run_checks(const std::vector<NamedCheck>& checks, int workers) {
  std::vector<CheckReport> reports(checks.size());
  std::vector<char> failed(checks.size(), 0);
  std::atomic<size_t> next{0};
  auto work = [&] {
    for (size_t i = next++; i < checks.size(); i = next++) {
      try {
        reports[i] = checks[i].run();
      } catch (const SolverFailure& e) {
        CheckReport r;
        r.name = checks[i].label;
        r.property = "solver failure";
        r.slack = std::numeric_limits<double>::quiet_NaN();
        r.pass = false;
        r.notes.push_back(e.what());
        reports[i] = r;
        failed[i] = 1;
      }
    }
  };
  const int n = std::clamp(workers, 1, static_cast<int>(std::max<size_t>(checks.size(), 1)));
  if (n == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < n; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  std::vector<size_t> order(checks.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) { return checks[a].label < checks[b].label; });
  RunOutcome out;
  for (size_t i : order) {
    out.reports.push_back(std::move(reports[i]));
    out.labels.push_back(checks[i].label);
    out.solver_failure = out.solver_failure || failed[i];
  }
  return out;
}

}  // namespace otflow
