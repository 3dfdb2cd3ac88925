#include "otflow/evi.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <fmt/format.h>

#include "otflow/error.hpp"
#include "otflow/lp_oracle.hpp"

namespace otflow {
namespace {

constexpr double kMagnitudeFloor = 1e-8;
constexpr double kDissipationSignTol = 1e-9;

double magnitude(std::initializer_list<double> terms) {
  double m = kMagnitudeFloor;
  for (double t : terms) m = std::max(m, std::abs(t));
  return m;
}

Digest context_digest(const FlowCheckContext& ctx) {
  Digest d;
  d.add(ctx.g().spec().str()).add(ctx.model.str()).add(ctx.lambda).add(ctx.dt).add(std::int64_t{ctx.min_steps});
  d.add(std::int64_t{ctx.transport.slices}).add(ctx.transport.gamma).add(ctx.transport.tolerance);
  d.add(ctx.relative_tolerance());
  return d;
}

void check_times(double t0, double t1, const char* what) {
  if (!(t0 >= 0.0) || !(t1 > t0) || !std::isfinite(t1))
    throw InvalidArgument(fmt::format("{}: need 0 <= t0 < t1, got t0 = {}, t1 = {}", what, t0, t1));
}

void record_context(CheckReport& report, const FlowCheckContext& ctx) {
  report.measured["lambda"] = ctx.lambda;
  report.measured["relative_tolerance"] = ctx.relative_tolerance();
  if (ctx.lambda_overridden) {
    report.measured["lambda_override"] = 1.0;
    report.notes.push_back(
        fmt::format("lambda overridden to {} (grid Ricci bound {})", ctx.lambda, ctx.g().ricci_lambda()));
  }
}

void record_w2(CheckReport& report, const std::string& key, const W2Estimate& w, double used) {
  report.measured[key + "_dynamic"] = w.dynamic_sq;
  if (w.has_lp) {
    report.measured[key + "_lp"] = w.lp_sq;
    report.measured[key + "_lp_lower"] = w.lp_lower_sq();
    report.measured[key + "_lp_upper"] = w.lp_upper_sq();
  }
  report.measured[key] = used;
  report.measured[key + "_dr_iterations"] = w.diagnostics.iterations;
  report.measured[key + "_continuity_residual"] = w.diagnostics.continuity_residual;
  report.measured[key + "_floor_hits"] = w.diagnostics.floor_hits;
}

// Trajectory diagnostics of every evolution entering a check.
struct FlowLog {
  double max_mass_error = 0.0;
  double min_density = std::numeric_limits<double>::infinity();
  double max_entropy_increase = -std::numeric_limits<double>::infinity();
  int steps = 0;
  int halvings = 0;

  void add(const DiffusionTrajectory& traj) {
    max_mass_error = std::max(max_mass_error, traj.max_mass_error());
    min_density = std::min(min_density, traj.min_density());
    if (traj.log.size() > 1) max_entropy_increase = std::max(max_entropy_increase, traj.max_entropy_increase());
    steps += static_cast<int>(traj.log.size()) - 1;
  }

  void record(CheckReport& report) const {
    if (steps == 0) return;
    report.measured["flow_max_mass_error"] = max_mass_error;
    report.measured["flow_min_density"] = min_density;
    report.measured["flow_max_entropy_increase"] = max_entropy_increase;
    report.measured["flow_steps"] = steps;
    if (halvings > 0) report.measured["flow_step_halvings"] = halvings;
  }
};

DensityField run_flow(const FlowCheckContext& ctx, const DensityField& rho, double t, FlowLog& log) {
  if (t == 0.0) return rho;
  double dt = ctx.time_step(t);
  for (int halving = 0;; ++halving) {
    try {
      const DiffusionTrajectory traj =
          evolve(ctx.g(), ctx.model, rho, t, dt, std::numeric_limits<int>::max(), ctx.diffusion);
      log.add(traj);
      log.halvings = std::max(log.halvings, halving);
      return traj.final_state();
    } catch (const SolverFailure&) {
      if (halving >= ctx.max_step_halvings) throw;
      dt /= 2.0;
    }
  }
}

double entropy(const FlowCheckContext& ctx, const DensityField& rho) { return evaluate(ctx.model, ctx.g(), rho); }

}  // namespace

double e_lambda(double lambda, double t) {
  const double x = lambda * t;
  if (std::abs(x) < 1e-5) return t * (1.0 + x / 2.0 + x * x / 6.0 + x * x * x / 24.0);
  return std::expm1(x) / lambda;
}

double sinh_ratio(double t) {
  if (std::abs(t) < 1e-4) return 1.0 - t * t / 6.0 + 7.0 * t * t * t * t / 360.0;
  return t / std::sinh(t);
}

DiniEstimate dini_upper(const std::map<double, double>& samples, double t0) {
  const auto base = samples.find(t0);
  if (base == samples.end()) throw InvalidArgument(fmt::format("dini_upper: no sample at t0 = {}", t0));
  auto it = std::next(base);
  if (it == samples.end() || std::next(it) == samples.end())
    throw InvalidArgument("dini_upper: need at least two samples after t0");
  DiniEstimate out;
  out.value = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < 2; ++i, ++it) {
    const double h = it->first - t0;
    out.steps.push_back(h);
    out.value = std::max(out.value, (it->second - base->second) / h);
  }
  return out;
}

double TolerancePolicy::relative(const ManifoldGrid& grid) const {
  if (override_value > 0.0) return override_value;
  return grid.is_flat() ? flat : sphere;
}

FlowCheckContext FlowCheckContext::make(std::shared_ptr<const ManifoldGrid> grid, const EntropyModel& model,
                                        std::optional<double> lambda_override) {
  if (!grid) throw InvalidArgument("FlowCheckContext: grid is required");
  FlowCheckContext ctx;
  ctx.model = model;
  ctx.lambda = lambda_override.value_or(grid->ricci_lambda());
  ctx.lambda_overridden = lambda_override.has_value() && *lambda_override != grid->ricci_lambda();
  ctx.grid = std::move(grid);
  return ctx;
}

double FlowCheckContext::time_step(double duration) const {
  if (dt > 0.0) return dt;
  if (min_steps < 1) throw InvalidArgument("FlowCheckContext: min_steps must be positive");
  return duration > 0.0 ? duration / min_steps : 1.0;
}

double FlowCheckContext::diffusion_time_scale() const {
  const auto& mu = grid->spectrum().eigenvalues();
  const auto& null = grid->spectrum().null_mask();
  double smallest = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < mu.size(); ++i)
    if (!null[i]) smallest = std::min(smallest, std::abs(mu[i]));
  return 1.0 / smallest;
}

double W2Estimate::lp_lower_sq() const {
  const double r = std::max(0.0, std::sqrt(lp_sq) - 2.0 * quantization);
  return r * r;
}

double W2Estimate::lp_upper_sq() const {
  const double r = std::sqrt(lp_sq) + 2.0 * quantization;
  return r * r;
}

double quantization_radius(const ManifoldGrid& grid) {
  const ManifoldSpec& spec = grid.spec();
  double sum = 0.0;
  switch (spec.kind) {
    case ManifoldKind::circle:
      sum = std::pow(spec.side / spec.cols, 2);
      break;
    case ManifoldKind::torus2:
      sum = std::pow(spec.side / spec.rows, 2) + std::pow(spec.side / spec.cols, 2);
      break;
    case ManifoldKind::sphere2:
      sum = std::pow(std::numbers::pi / spec.rows, 2) + std::pow(2.0 * std::numbers::pi / spec.cols, 2);
      break;
  }
  return std::sqrt(sum / 12.0);
}

W2Estimate estimate_w2_sq(const FlowCheckContext& ctx, const DensityField& a, const DensityField& b) {
  W2Estimate out;
  out.quantization = quantization_radius(ctx.g());
  out.lp_sq = std::numeric_limits<double>::quiet_NaN();
  if (a == b) {
    out.dynamic_sq = 0.0;
    out.diagnostics.converged = true;
    if (ctx.use_lp_oracle && ctx.g().size() <= kLpOracleMaxNodes) {
      out.lp_sq = 0.0;
      out.has_lp = true;
    }
    return out;
  }
  const TransportPath path = solve_w2(ctx.g(), a, b, ctx.transport);
  out.dynamic_sq = path.w2_sq_estimate;
  out.diagnostics = path.diagnostics;
  if (ctx.use_lp_oracle && ctx.g().size() <= kLpOracleMaxNodes) {
    const double w = lp_w2_oracle(ctx.g(), a, b).w2;
    out.lp_sq = w * w;
    out.has_lp = true;
  }
  return out;
}

DensityField flow(const FlowCheckContext& ctx, const DensityField& rho, double t) {
  FlowLog log;
  return run_flow(ctx, rho, t, log);
}

CheckReport check_evi_integral(const FlowCheckContext& ctx, const DensityField& mu0, const DensityField& nu, double t0,
                               double t1) {
  check_times(t0, t1, "check_evi_integral");
  CheckReport report;
  report.name = "evi_integral";
  report.property = "e^{lambda (t1-t0)}/2 W2^2(mu_t1, nu) - 1/2 W2^2(mu_t0, nu) <= E_lambda(t1-t0) (E(nu) - E(mu_t1))";
  report.inputs_digest = context_digest(ctx).add(mu0).add(nu).add(t0).add(t1).hex();
  record_context(report, ctx);
  FlowLog log;
  const DensityField at_t0 = run_flow(ctx, mu0, t0, log);
  const DensityField at_t1 = run_flow(ctx, at_t0, t1 - t0, log);
  const double growth = std::exp(ctx.lambda * (t1 - t0));
  const W2Estimate w1 = estimate_w2_sq(ctx, at_t1, nu);
  const W2Estimate w0 = estimate_w2_sq(ctx, at_t0, nu);
  const double d1 = w1.conservative(-0.5 * growth);
  const double d0 = w0.conservative(0.5);
  const double lhs = 0.5 * growth * d1 - 0.5 * d0;
  const double e_nu = entropy(ctx, nu);
  const double e_t1 = entropy(ctx, at_t1);
  const double rhs = e_lambda(ctx.lambda, t1 - t0) * (e_nu - e_t1);
  report.slack = rhs - lhs;
  report.tolerance = ctx.relative_tolerance() * magnitude({lhs, rhs});
  report.measured["lhs"] = lhs;
  report.measured["rhs"] = rhs;
  record_w2(report, "w2sq_t1_nu", w1, d1);
  record_w2(report, "w2sq_t0_nu", w0, d0);
  report.measured["entropy_nu"] = e_nu;
  report.measured["entropy_t1"] = e_t1;
  log.record(report);
  report.finalize();
  return report;
}

CheckReport check_evi_differential(const FlowCheckContext& ctx, const DensityField& mu0, const DensityField& nu,
                                   double t) {
  if (!(t >= 0.0) || !std::isfinite(t)) throw InvalidArgument("check_evi_differential: need t >= 0");
  CheckReport report;
  report.name = "evi_differential";
  report.property = "1/2 D+ W2^2(nu, mu_t) + lambda/2 W2^2(nu, mu_t) <= E(nu) - E(mu_t)";
  report.inputs_digest = context_digest(ctx).add(mu0).add(nu).add(t).hex();
  record_context(report, ctx);
  const double scale = ctx.diffusion_time_scale();
  const std::vector<double> steps = {1e-2 * scale, 1e-3 * scale};
  FlowLog log;
  const DensityField at_t = run_flow(ctx, mu0, t, log);
  std::map<double, double> dynamic, lp;
  std::vector<W2Estimate> estimates;
  auto sample = [&](double time, const DensityField& rho) {
    const W2Estimate w = estimate_w2_sq(ctx, nu, rho);
    dynamic[time] = 0.5 * w.dynamic_sq;
    if (w.has_lp) lp[time] = 0.5 * w.lp_sq;
    estimates.push_back(w);
  };
  sample(t, at_t);
  for (double h : steps) sample(t + h, run_flow(ctx, at_t, h, log));
  const W2Estimate& w_t = estimates.front();
  const double e_nu = entropy(ctx, nu);
  const double e_t = entropy(ctx, at_t);
  const double rhs = e_nu - e_t;
  const DiniEstimate dini = dini_upper(dynamic, t);
  const double lhs = dini.value + 0.5 * ctx.lambda * w_t.conservative(-0.5 * ctx.lambda);
  report.measured["dini_dynamic"] = dini.value;
  // Node-to-node transport moves mass by whole grid spacings, so its
  // difference quotients stay O(1) as the step shrinks.
  if (w_t.has_lp) report.measured["dini_lp"] = dini_upper(lp, t).value;
  report.slack = rhs - lhs;
  report.tolerance = ctx.relative_tolerance() * magnitude({lhs, rhs});
  report.measured["lhs"] = lhs;
  report.measured["rhs"] = rhs;
  report.measured["step_large"] = dini.steps[1];
  report.measured["step_small"] = dini.steps[0];
  record_w2(report, "w2sq_t_nu", w_t, w_t.conservative(-0.5 * ctx.lambda));
  report.measured["entropy_nu"] = e_nu;
  report.measured["entropy_t"] = e_t;
  log.record(report);
  report.notes.push_back(fmt::format("forward steps {} and {} (1e-2 and 1e-3 times the diffusion time scale {})",
                                     format_double(steps[0]), format_double(steps[1]), format_double(scale)));
  report.finalize();
  return report;
}

CheckReport check_contraction(const FlowCheckContext& ctx, const DensityField& mu, const DensityField& nu, double t) {
  if (!(t >= 0.0) || !std::isfinite(t)) throw InvalidArgument("check_contraction: need t >= 0");
  CheckReport report;
  report.name = "contraction";
  report.property = "W2(mu_t, nu_t) <= e^{-lambda t} W2(mu, nu)";
  report.inputs_digest = context_digest(ctx).add(mu).add(nu).add(t).hex();
  record_context(report, ctx);
  FlowLog log;
  const DensityField mu_t = run_flow(ctx, mu, t, log);
  const DensityField nu_t = run_flow(ctx, nu, t, log);
  const W2Estimate before = estimate_w2_sq(ctx, mu, nu);
  const W2Estimate after = estimate_w2_sq(ctx, mu_t, nu_t);
  const double lhs = std::sqrt(after.high());
  const double rhs = std::exp(-ctx.lambda * t) * std::sqrt(before.low());
  report.slack = rhs - lhs;
  report.tolerance = ctx.relative_tolerance() * magnitude({lhs, rhs});
  report.measured["lhs"] = lhs;
  report.measured["rhs"] = rhs;
  record_w2(report, "w2sq_t", after, after.high());
  record_w2(report, "w2sq_0", before, before.low());
  if (rhs > 0.0) report.measured["ratio"] = lhs / rhs;
  log.record(report);
  report.finalize();
  return report;
}

CheckReport check_regularization(const FlowCheckContext& ctx, const DensityField& mu0, const DensityField& nu,
                                 double t) {
  if (!(t > 0.0) || !std::isfinite(t)) throw InvalidArgument("check_regularization: need t > 0");
  CheckReport report;
  report.name = "regularization";
  report.property = "E(mu_t) <= E(nu) + W2^2(mu0, nu) / (2 E_lambda(t))";
  report.inputs_digest = context_digest(ctx).add(mu0).add(nu).add(t).hex();
  record_context(report, ctx);
  FlowLog log;
  const DensityField mu_t = run_flow(ctx, mu0, t, log);
  const W2Estimate w = estimate_w2_sq(ctx, mu0, nu);
  const double d = w.low();
  const double lhs = entropy(ctx, mu_t);
  const double e_nu = entropy(ctx, nu);
  const double rhs = e_nu + d / (2.0 * e_lambda(ctx.lambda, t));
  report.slack = rhs - lhs;
  report.tolerance = ctx.relative_tolerance() * magnitude({lhs, rhs});
  report.measured["lhs"] = lhs;
  report.measured["rhs"] = rhs;
  report.measured["entropy_nu"] = e_nu;
  record_w2(report, "w2sq_mu0_nu", w, d);
  log.record(report);
  report.finalize();
  return report;
}

CheckReport check_uniform_continuity(const FlowCheckContext& ctx, const DensityField& mu0, double t0, double t1) {
  if (!(t0 >= 0.0) || !(t1 >= t0) || !std::isfinite(t1))
    throw InvalidArgument(fmt::format("check_uniform_continuity: need 0 <= t0 <= t1, got {}, {}", t0, t1));
  CheckReport report;
  report.name = "uniform_continuity";
  report.property = "W2^2(mu_t1, mu_t0) <= 2 E_{-lambda}(t1 - t0) (E(mu_t0) - E_inf)";
  report.inputs_digest = context_digest(ctx).add(mu0).add(t0).add(t1).hex();
  record_context(report, ctx);
  FlowLog log;
  const DensityField at_t0 = run_flow(ctx, mu0, t0, log);
  const DensityField at_t1 = run_flow(ctx, at_t0, t1 - t0, log);
  const W2Estimate w = estimate_w2_sq(ctx, at_t1, at_t0);
  const double lhs = w.high();
  const double e_t0 = entropy(ctx, at_t0);
  const double e_inf = entropy_infimum(ctx.model, ctx.g());
  const double rhs = 2.0 * e_lambda(-ctx.lambda, t1 - t0) * (e_t0 - e_inf);
  report.slack = rhs - lhs;
  report.tolerance = ctx.relative_tolerance() * magnitude({lhs, rhs});
  report.measured["lhs"] = lhs;
  report.measured["rhs"] = rhs;
  report.measured["entropy_t0"] = e_t0;
  report.measured["entropy_inf"] = e_inf;
  record_w2(report, "w2sq_t1_t0", w, lhs);
  log.record(report);
  report.finalize();
  return report;
}

CheckReport check_displacement_convexity(const FlowCheckContext& ctx, const DensityField& mu0,
                                         const DensityField& mu1, const std::vector<double>& s_samples) {
  if (s_samples.empty()) throw InvalidArgument("check_displacement_convexity: no s samples");
  for (double s : s_samples)
    if (!(s >= 0.0 && s <= 1.0))
      throw InvalidArgument(fmt::format("check_displacement_convexity: s = {} outside [0, 1]", s));
  CheckReport report;
  report.name = "displacement_convexity";
  report.property = "E(mu^s) <= (1-s) E(mu^0) + s E(mu^1) - lambda/2 s (1-s) W2^2(mu^0, mu^1)";
  Digest digest = context_digest(ctx).add(mu0).add(mu1);
  for (double s : s_samples) digest.add(s);
  report.inputs_digest = digest.hex();
  record_context(report, ctx);
  const double e0 = entropy(ctx, mu0);
  const double e1 = entropy(ctx, mu1);
  report.measured["entropy_0"] = e0;
  report.measured["entropy_1"] = e1;
  W2Estimate w;
  TransportPath path;
  if (mu0 == mu1) {
    w = estimate_w2_sq(ctx, mu0, mu1);
    path.s_nodes = {0.0, 1.0};
    path.rho = {mu0, mu1};
  } else {
    const TransportPath raw = solve_w2(ctx.g(), mu0, mu1, ctx.transport);
    // A near-constant-speed parametrization, so that slice s sits at distance
    // fraction s along the curve.
    const double eps = 1e-3 * std::sqrt(std::max(raw.w2_sq_estimate, kMagnitudeFloor));
    path = reparametrize(ctx.g(), raw, eps);
    w.dynamic_sq = raw.w2_sq_estimate;
    w.quantization = quantization_radius(ctx.g());
    w.diagnostics = raw.diagnostics;
    w.lp_sq = std::numeric_limits<double>::quiet_NaN();
    if (ctx.use_lp_oracle && ctx.g().size() <= kLpOracleMaxNodes) {
      const double lp = lp_w2_oracle(ctx.g(), mu0, mu1).w2;
      w.lp_sq = lp * lp;
      w.has_lp = true;
    }
  }
  const double d = w.conservative(-0.5 * ctx.lambda);
  record_w2(report, "w2sq_endpoints", w, d);
  // The reported sample is the one with the smallest slack relative to its own tolerance.
  double worst = 0.0, worst_tol = 0.0, worst_ratio = std::numeric_limits<double>::infinity();
  for (double s : s_samples) {
    const double lhs = entropy(ctx, interpolate(path, s));
    const double rhs = (1.0 - s) * e0 + s * e1 - 0.5 * ctx.lambda * s * (1.0 - s) * d;
    const double tol = ctx.relative_tolerance() * magnitude({lhs, rhs});
    report.measured[fmt::format("lhs_s{}", format_double(s))] = lhs;
    report.measured[fmt::format("rhs_s{}", format_double(s))] = rhs;
    if ((rhs - lhs) / tol < worst_ratio) {
      worst_ratio = (rhs - lhs) / tol;
      worst = rhs - lhs;
      worst_tol = tol;
      report.measured["worst_s"] = s;
    }
  }
  report.slack = worst;
  report.tolerance = worst_tol;
  report.finalize();
  return report;
}

ActionTerms action_terms(const FlowCheckContext& ctx, const TransportPath& path, double t, double s) {
  if (!(t > 0.0) || !std::isfinite(t)) throw InvalidArgument("action_terms: need t > 0");
  const int k_total = path.slices();
  int k = -1;
  for (int j = 1; j < k_total; ++j)
    if (std::abs(path.s_nodes[j] - s) <= 1e-12) k = j;
  if (k < 0) throw InvalidArgument(fmt::format("action_terms: s = {} is not an interior node of the path", s));
  const ManifoldGrid& g = ctx.g();
  for (int j = k - 1; j <= k + 1; ++j) {
    if (!(path.rho[j].minCoeff() > 0.0))
      throw InvalidArgument(fmt::format("action_terms: slice {} is not strictly positive", j));
  }
  const double ds_minus = path.s_nodes[k] - path.s_nodes[k - 1];
  const double ds_plus = path.s_nodes[k + 1] - path.s_nodes[k];
  if (std::abs(ds_minus - ds_plus) > 1e-12 * ds_plus)
    throw InvalidArgument("action_terms: the path s-grid must be uniform around s");
  ActionTerms out;
  out.s = path.s_nodes[k];
  out.t = t;
  out.ds = ds_plus;
  out.dt_step = t * ds_plus;
  if (out.dt_step < 1e-14 * std::max(t, 1.0)) throw InvalidArgument("action_terms: time difference step underflows");

  // rho~^{s_j}_tau = S_{s_j tau}(rho^{s_j}) for j = k-1, k, k+1.
  auto tilde = [&](int j, double tau) { return flow(ctx, path.rho[j], path.s_nodes[j] * tau); };
  auto potential = [&](const DensityField& lo, const DensityField& mid, const DensityField& hi) {
    ScalarField ds_rho = (hi - lo) / (2.0 * out.ds);
    ds_rho.array() -= g.integrate(ds_rho) / g.volume();
    return solve_potential(g, mid, ds_rho, ctx.transport.potential_tol);
  };
  auto half_action = [&](double tau) {
    const DensityField lo = tilde(k - 1, tau), mid = tilde(k, tau), hi = tilde(k + 1, tau);
    return 0.5 * dirichlet_energy(g, mid, potential(lo, mid, hi));
  };
  out.d_dt_half_action = (half_action(t + out.dt_step) - half_action(t - out.dt_step)) / (2.0 * out.dt_step);

  const DensityField lo = tilde(k - 1, t), mid = tilde(k, t), hi = tilde(k + 1, t);
  out.d_ds_entropy = (entropy(ctx, hi) - entropy(ctx, lo)) / (2.0 * out.ds);
  const ScalarField phi = potential(lo, mid, hi);
  out.action = dirichlet_energy(g, mid, phi);

  ScalarField u(g.size()), excess(g.size());
  for (Eigen::Index i = 0; i < g.size(); ++i) {
    u[i] = ctx.model.u(mid[i]);
    excess[i] = ctx.model.pressure_excess(mid[i]);
  }
  const ScalarField curvature = hessian_norm_sq(g, phi) + ricci_quadratic(g, gradient(g, phi));
  const ScalarField lap = laplacian(g, phi);
  out.dissipation_curvature = -g.integrate(curvature.cwiseProduct(u));
  out.dissipation_pressure = -g.integrate(lap.cwiseProduct(lap).cwiseProduct(excess));
  return out;
}

namespace {

void record_terms(CheckReport& report, const ActionTerms& a) {
  report.measured["s"] = a.s;
  report.measured["t"] = a.t;
  report.measured["ds"] = a.ds;
  report.measured["dt_step"] = a.dt_step;
  report.measured["d_dt_half_action"] = a.d_dt_half_action;
  report.measured["d_ds_entropy"] = a.d_ds_entropy;
  report.measured["action"] = a.action;
  report.measured["dissipation"] = a.dissipation();
  report.measured["dissipation_curvature"] = a.dissipation_curvature;
  report.measured["dissipation_pressure"] = a.dissipation_pressure;
}

Digest path_digest(const FlowCheckContext& ctx, const TransportPath& path, double t, double s) {
  Digest d = context_digest(ctx);
  for (size_t k = 0; k < path.rho.size(); ++k) d.add(path.s_nodes[k]).add(path.rho[k]);
  return d.add(t).add(s);
}

}  // namespace

CheckReport action_identity(const FlowCheckContext& ctx, const TransportPath& path, double t, double s) {
  CheckReport report;
  report.name = "action_identity";
  report.property = "d/dt 1/2 A~ + d/ds E(rho~) = s D~, D~ <= 0 when Ric >= 0 and the McCann conditions hold";
  report.kind = CheckKind::identity;
  report.inputs_digest = path_digest(ctx, path, t, s).hex();
  record_context(report, ctx);
  const ActionTerms a = action_terms(ctx, path, t, s);
  record_terms(report, a);
  const double lhs = a.d_dt_half_action + a.d_ds_entropy;
  const double rhs = a.s * a.dissipation();
  report.slack = lhs - rhs;
  report.tolerance = ctx.relative_tolerance() * magnitude({a.d_dt_half_action, a.d_ds_entropy, rhs});
  report.measured["lhs"] = lhs;
  report.measured["rhs"] = rhs;
  report.finalize();
  const bool sign_applies = ctx.g().ricci_lambda() >= 0.0 && check_mccann(ctx.model, ctx.g().dim()).pass;
  if (sign_applies) {
    report.measured["dissipation_sign_tolerance"] = kDissipationSignTol;
    if (a.dissipation() > kDissipationSignTol) {
      report.pass = false;
      report.notes.push_back(fmt::format("dissipation {} is positive", format_double(a.dissipation())));
    }
  } else {
    report.notes.push_back("sign of the dissipation not asserted (negative Ricci bound or McCann conditions fail)");
  }
  return report;
}

CheckReport check_lambda_action_inequality(const FlowCheckContext& ctx, const TransportPath& path, double t,
                                           double s) {
  if (ctx.model.kind() != EntropyKind::log)
    throw InvalidArgument("check_lambda_action_inequality: only the log entropy (heat flow) is covered");
  CheckReport report;
  report.name = "lambda_action_inequality";
  report.property = "1/2 d/dt A~ + lambda s A~ + d/ds E(rho~) <= 0";
  report.inputs_digest = path_digest(ctx, path, t, s).hex();
  record_context(report, ctx);
  const ActionTerms a = action_terms(ctx, path, t, s);
  record_terms(report, a);
  const double curvature_term = ctx.lambda * a.s * a.action;
  const double lhs = a.d_dt_half_action + curvature_term + a.d_ds_entropy;
  report.slack = -lhs;
  report.tolerance =
      ctx.relative_tolerance() * magnitude({a.d_dt_half_action, curvature_term, a.d_ds_entropy});
  report.measured["lhs"] = lhs;
  report.measured["rhs"] = 0.0;
  report.measured["lambda_s_action"] = curvature_term;
  report.finalize();
  return report;
}

CheckReport check_monotonicity_lemma(const std::map<double, double>& samples, double tolerance) {
  if (samples.size() < 2) throw InvalidArgument("check_monotonicity_lemma: need at least two samples");
  CheckReport report;
  report.name = "monotonicity";
  report.property = "forward differences of the sampled function are <= 0";
  Digest digest;
  double scale = kMagnitudeFloor;
  double worst_increase = -std::numeric_limits<double>::infinity();
  double worst_quotient = -std::numeric_limits<double>::infinity();
  for (auto it = samples.begin(); it != samples.end(); ++it) {
    digest.add(it->first).add(it->second);
    scale = std::max(scale, std::abs(it->second));
    const auto next = std::next(it);
    if (next == samples.end()) break;
    const double increase = next->second - it->second;
    worst_increase = std::max(worst_increase, increase);
    worst_quotient = std::max(worst_quotient, increase / (next->first - it->first));
  }
  report.inputs_digest = digest.hex();
  report.slack = -worst_increase;
  report.tolerance = tolerance * scale;
  report.measured["max_increase"] = worst_increase;
  report.measured["max_forward_quotient"] = worst_quotient;
  report.measured["samples"] = static_cast<double>(samples.size());
  report.finalize();
  return report;
}

}  // namespace otflow
