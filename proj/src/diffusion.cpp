#include "otflow/diffusion.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "otflow/error.hpp"

namespace otflow {
namespace {

double weighted_dot(const ManifoldGrid& grid, const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  double sum = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) sum += grid.weights()[i] * a[i] * b[i];
  return sum;
}

DensityField heat_step(const ManifoldGrid& grid, const DensityField& rho, double dt) {
  // Constants are invariant; removing one first keeps a uniform density exactly fixed.
  const ScalarField shifted = rho.array() - rho[0];
  const ScalarField increment =
      grid.spectrum().apply_function(shifted, [dt](double mu, int) { return std::expm1(dt * mu); });
  return rho + increment;
}

// Solves (diag(d) - dt lap) x = r by conjugate gradients in the weighted inner
// product, preconditioned with (c - dt lap)^{-1} through the eigenbasis.
Eigen::VectorXd solve_jacobian(const ManifoldGrid& grid, const Eigen::VectorXd& d, double dt, const Eigen::VectorXd& r,
                               const DiffusionParams& params) {
  const double c = d.mean();
  auto apply = [&](const Eigen::VectorXd& x) -> Eigen::VectorXd {
    return d.cwiseProduct(x) - dt * laplacian(grid, x);
  };
  auto precondition = [&](const Eigen::VectorXd& x) {
    return grid.spectrum().apply_function(x, [&](double mu, int) { return 1.0 / (c - dt * mu); });
  };
  Eigen::VectorXd x = Eigen::VectorXd::Zero(r.size());
  Eigen::VectorXd res = r;
  const double r_norm = std::sqrt(weighted_dot(grid, r, r));
  if (r_norm == 0.0) return x;
  Eigen::VectorXd z = precondition(res);
  Eigen::VectorXd p = z;
  double rz = weighted_dot(grid, res, z);
  for (int it = 0; it < params.cg_max_iter; ++it) {
    const Eigen::VectorXd ap = apply(p);
    const double alpha = rz / weighted_dot(grid, p, ap);
    x += alpha * p;
    res -= alpha * ap;
    if (std::sqrt(weighted_dot(grid, res, res)) <= params.cg_tol * r_norm) return x;
    z = precondition(res);
    const double rz_next = weighted_dot(grid, res, z);
    p = z + (rz_next / rz) * p;
    rz = rz_next;
  }
  throw SolverFailure("diffusion: conjugate gradients did not converge in the Newton step");
}

DensityField power_step(const ManifoldGrid& grid, const EntropyModel& model, const DensityField& rho, double dt,
                        const DiffusionParams& params) {
  const double m = model.exponent();
  const double inv_m = 1.0 / m;
  auto residual = [&](const Eigen::VectorXd& u) -> Eigen::VectorXd {
    return u.array().pow(inv_m).matrix() - dt * laplacian(grid, u) - rho;
  };
  const double scale = std::max(1.0, rho.cwiseAbs().maxCoeff());
  Eigen::VectorXd u = rho.array().pow(m).matrix();
  Eigen::VectorXd f = residual(u);
  int it = 0;
  while (f.cwiseAbs().maxCoeff() > params.newton_tol * scale) {
    if (++it > params.newton_max_iter)
      throw SolverFailure(fmt::format("diffusion: Newton did not converge in {} iterations (residual {})",
                                      params.newton_max_iter, f.cwiseAbs().maxCoeff()));
    const Eigen::VectorXd d = inv_m * u.array().pow(inv_m - 1.0).matrix();
    const Eigen::VectorXd delta = solve_jacobian(grid, d, dt, -f, params);
    // Damp the update if it would leave the admissible range.
    double lambda = 1.0;
    Eigen::VectorXd next = u + delta;
    const double floor_u = std::pow(params.density_floor, m);
    while (next.minCoeff() <= floor_u) {
      lambda *= 0.5;
      if (lambda < 1e-6)
        throw SolverFailure(fmt::format("diffusion: density floor {} reached; decrease dt", params.density_floor));
      next = u + lambda * delta;
    }
    u = next;
    f = residual(u);
  }
  DensityField out = rho + dt * laplacian(grid, u);
  if (!(out.minCoeff() > params.density_floor))
    throw SolverFailure(fmt::format("diffusion: density floor {} reached; decrease dt", params.density_floor));
  return out;
}

StepRecord record(const ManifoldGrid& grid, const EntropyModel& model, const DensityField& rho, double t) {
  return {t, grid.integrate(rho), rho.minCoeff(), evaluate(model, grid, rho)};
}

}  // namespace

DensityField step(const ManifoldGrid& grid, const EntropyModel& model, const DensityField& rho, double dt,
                  const DiffusionParams& params) {
  grid.check_shape(rho, "step");
  if (!(dt > 0.0) || !std::isfinite(dt)) throw InvalidArgument("time step must be positive");
  if (!(rho.minCoeff() > 0.0)) throw InvalidArgument("step: density must be strictly positive");
  DensityField out =
      model.kind() == EntropyKind::log ? heat_step(grid, rho, dt) : power_step(grid, model, rho, dt, params);
  if (!(out.minCoeff() > 0.0) || !out.allFinite())
    throw SolverFailure(fmt::format("diffusion: positivity lost (min {}); decrease dt", out.minCoeff()));
  return out;
}

double default_dt(const ManifoldGrid& grid, const EntropyModel& model, const DensityField& rho) {
  const double h = grid.min_spacing();
  if (model.kind() == EntropyKind::log) return 1e-3 * h * h;
  return 1e-3 * h * h * std::pow(rho.minCoeff(), 1.0 - model.exponent());
}

double DiffusionTrajectory::max_mass_error() const {
  double worst = 0.0;
  for (const auto& r : log) worst = std::max(worst, std::abs(r.mass - 1.0));
  return worst;
}

double DiffusionTrajectory::min_density() const {
  double worst = std::numeric_limits<double>::infinity();
  for (const auto& r : log) worst = std::min(worst, r.min_density);
  return worst;
}

double DiffusionTrajectory::max_entropy_increase() const {
  double worst = -std::numeric_limits<double>::infinity();
  for (size_t i = 1; i < log.size(); ++i) worst = std::max(worst, log[i].entropy - log[i - 1].entropy);
  return log.size() > 1 ? worst : 0.0;
}

DiffusionTrajectory evolve(const ManifoldGrid& grid, const EntropyModel& model, const DensityField& rho0,
                           double t_final, double dt, int save_every, const DiffusionParams& params) {
  grid.check_shape(rho0, "evolve");
  if (!(t_final >= 0.0) || !std::isfinite(t_final)) throw InvalidArgument("final time must be nonnegative");
  if (!(dt > 0.0)) throw InvalidArgument("time step must be positive");
  if (save_every < 1) throw InvalidArgument("save_every must be >= 1");
  DiffusionTrajectory traj;
  const int steps = t_final == 0.0 ? 0 : std::max(1, static_cast<int>(std::ceil(t_final / dt - 1e-9)));
  traj.dt = steps == 0 ? dt : t_final / steps;
  traj.times.push_back(0.0);
  traj.states.push_back(rho0);
  traj.log.push_back(record(grid, model, rho0, 0.0));
  DensityField rho = rho0;
  for (int k = 1; k <= steps; ++k) {
    rho = step(grid, model, rho, traj.dt, params);
    const double t = k == steps ? t_final : k * traj.dt;
    traj.log.push_back(record(grid, model, rho, t));
    if (k % save_every == 0 || k == steps) {
      traj.times.push_back(t);
      traj.states.push_back(rho);
    }
  }
  return traj;
}

double fisher_information(const ManifoldGrid& grid, const DensityField& rho) {
  grid.check_shape(rho, "fisher_information");
  if (!(rho.minCoeff() > 0.0)) throw InvalidArgument("fisher_information: density must be strictly positive");
  return -grid.integrate(rho.array().log().matrix().cwiseProduct(laplacian(grid, rho)));
}

CheckReport check_semigroup(const ManifoldGrid& grid, const EntropyModel& model, const DensityField& rho0, double t1,
                            double t2, double dt, const DiffusionParams& params) {
  CheckReport report;
  report.name = "semigroup";
  report.property = "S_{t1+t2}(rho) = S_{t2}(S_{t1}(rho))";
  report.kind = CheckKind::identity;
  report.inputs_digest = Digest()
                             .add(grid.spec().str())
                             .add(model.str())
                             .add(rho0)
                             .add(t1)
                             .add(t2)
                             .add(dt)
                             .hex();
  const DensityField direct = evolve(grid, model, rho0, t1 + t2, dt, 1 << 30, params).final_state();
  const DiffusionTrajectory first = evolve(grid, model, rho0, t1, dt, 1 << 30, params);
  const DensityField composed = evolve(grid, model, first.final_state(), t2, dt, 1 << 30, params).final_state();
  const DensityField full = step(grid, model, rho0, dt, params);
  const DensityField halves = step(grid, model, step(grid, model, rho0, 0.5 * dt, params), 0.5 * dt, params);
  const double truncation = (full - halves).cwiseAbs().maxCoeff();
  const int steps = static_cast<int>(std::ceil((t1 + t2) / dt - 1e-9));
  const double roundoff = 64.0 * std::numeric_limits<double>::epsilon() * steps * rho0.cwiseAbs().maxCoeff();
  report.slack = (direct - composed).cwiseAbs().maxCoeff();
  report.tolerance = 5.0 * std::max(truncation, roundoff);
  report.measured["sup_difference"] = report.slack;
  report.measured["step_truncation_estimate"] = truncation;
  report.measured["roundoff_floor"] = roundoff;
  report.measured["steps"] = steps;
  report.finalize();
  if (roundoff > truncation) report.notes.push_back("truncation estimate below roundoff; roundoff floor used");
  return report;
}

std::string trajectory_csv(const ManifoldGrid& grid, const DiffusionTrajectory& trajectory) {
  std::string out = "t,node";
  static const char* names[2][2] = {{"x", "y"}, {"theta", "phi_coord"}};
  for (int a = 0; a < grid.dim(); ++a) out += fmt::format(",{}", names[grid.is_flat() ? 0 : 1][a]);
  out += ",rho\n";
  for (size_t k = 0; k < trajectory.states.size(); ++k) {
    for (Eigen::Index i = 0; i < grid.size(); ++i) {
      out += format_double(trajectory.times[k]);
      out += fmt::format(",{}", i);
      for (int a = 0; a < grid.dim(); ++a) out += "," + format_double(grid.nodes()(i, a));
      out += "," + format_double(trajectory.states[k][i]) + "\n";
    }
  }
  return out;
}

}  // namespace otflow
