#pragma once

#include <string>
#include <vector>

#include "otflow/check_report.hpp"
#include "otflow/density.hpp"
#include "otflow/entropy.hpp"
#include "otflow/manifold.hpp"

namespace otflow {

struct DiffusionParams {
  double newton_tol = 1e-12;
  int newton_max_iter = 50;
  double cg_tol = 1e-13;
  int cg_max_iter = 2000;
  /// A Newton iterate below this density aborts the step.
  double density_floor = 1e-10;
};

/// One time step of d rho / dt = lap U(rho).
///
/// Heat (log model): exact propagator exp(dt lap) applied in the Laplacian
/// eigenbasis. Power models: backward Euler in u = U(rho),
///   u^{1/m} - dt lap u = rho_old,
/// solved by Newton with preconditioned conjugate gradients; the new density
/// is rho_old + dt lap u, so mass is conserved independently of the Newton
/// tolerance. Throws SolverFailure when Newton does not converge or an iterate
/// drops below the density floor.
DensityField step(const ManifoldGrid& grid, const EntropyModel& model, const DensityField& rho, double dt,
                  const DiffusionParams& params = {});

/// 1e-3 h^2 (heat) or 1e-3 h^2 (min rho)^{1-m} (power), h the smallest grid spacing.
double default_dt(const ManifoldGrid& grid, const EntropyModel& model, const DensityField& rho);

struct StepRecord {
  double t = 0.0;
  double mass = 0.0;
  double min_density = 0.0;
  double entropy = 0.0;
};

struct DiffusionTrajectory {
  /// Stored states (every save_every-th step plus the final one).
  std::vector<double> times;
  std::vector<DensityField> states;
  /// Diagnostics for every step, starting with the initial state.
  std::vector<StepRecord> log;
  double dt = 0.0;

  const DensityField& final_state() const { return states.back(); }

  /// Largest |mass - 1|, smallest density and largest entropy increase over the log.
  double max_mass_error() const;
  double min_density() const;
  double max_entropy_increase() const;
};

/// Runs ceil(t_final / dt) equal steps ending exactly at t_final.
DiffusionTrajectory evolve(const ManifoldGrid& grid, const EntropyModel& model, const DensityField& rho0,
                           double t_final, double dt, int save_every = 1, const DiffusionParams& params = {});

/// One CSV row per (stored state, node): t,node,<coordinates>,rho.
std::string trajectory_csv(const ManifoldGrid& grid, const DiffusionTrajectory& trajectory);

/// -integral of log(rho) lap rho: the entropy dissipation rate of the discrete heat flow.
double fisher_information(const ManifoldGrid& grid, const DensityField& rho);

/// Compares evolve(t1 + t2) with evolve(t2) after evolve(t1) at step dt. The
/// tolerance is 5x the per-step truncation estimate |S_dt - S_{dt/2} S_{dt/2}|
/// (floored at the roundoff level of the step count).
CheckReport check_semigroup(const ManifoldGrid& grid, const EntropyModel& model, const DensityField& rho0, double t1,
                            double t2, double dt, const DiffusionParams& params = {});

}  // namespace otflow
