#pragma once

#include <map>
#include <memory>
#include <optional>
#include <vector>

#include "otflow/check_report.hpp"
#include "otflow/density.hpp"
#include "otflow/diffusion.hpp"
#include "otflow/entropy.hpp"
#include "otflow/manifold.hpp"
#include "otflow/transport.hpp"

namespace otflow {

/// E_lambda(t) = integral of e^{lambda r} over [0, t]: (e^{lambda t} - 1) / lambda, or t at lambda = 0.
double e_lambda(double lambda, double t);

/// t / sinh(t), equal to 1 at t = 0.
double sinh_ratio(double t);

struct DiniEstimate {
  double value = 0.0;
  /// The two forward steps used, smallest first.
  std::vector<double> steps;
};

/// Largest forward difference quotient over the two smallest steps h = t - t0
/// among the samples after t0. Throws InvalidArgument if t0 is missing or
/// fewer than two later samples exist.
DiniEstimate dini_upper(const std::map<double, double>& samples, double t0);

struct TolerancePolicy {
  double flat = 5e-3;
  double sphere = 5e-2;
  /// Used instead of flat / sphere when positive.
  double override_value = 0.0;

  double relative(const ManifoldGrid& grid) const;
};

/// Shared setting of the flow checks: grid, entropy, curvature bound and
/// solver parameters.
struct FlowCheckContext {
  std::shared_ptr<const ManifoldGrid> grid;
  EntropyModel model = EntropyModel::log();
  /// Lower Ricci bound used by the checks; grid->ricci_lambda() unless overridden.
  double lambda = 0.0;
  bool lambda_overridden = false;
  DiffusionParams diffusion;
  /// Diffusion step; 0 selects duration / min_steps for every evolution.
  double dt = 0.0;
  int min_steps = 64;
  /// An evolution that hits the diffusion density floor is retried with the
  /// step halved, at most this many times.
  int max_step_halvings = 6;
  TransportParams transport;
  TolerancePolicy tolerance;
  /// Record the LP value next to the dynamic one on grids up to kLpOracleMaxNodes.
  bool use_lp_oracle = true;

  static FlowCheckContext make(std::shared_ptr<const ManifoldGrid> grid, const EntropyModel& model,
                               std::optional<double> lambda_override = std::nullopt);

  const ManifoldGrid& g() const { return *grid; }
  double relative_tolerance() const { return tolerance.relative(*grid); }
  /// Step used to evolve over `duration`.
  double time_step(double duration) const;
  /// Inverse of the smallest nonzero Laplacian eigenvalue magnitude.
  double diffusion_time_scale() const;
};

/// Squared distance estimates between two densities. The LP value is the
/// distance between node-supported measures; moving each cell's mass to its
/// node costs at most `quantization`, so the distance between the cell-averaged
/// densities lies in [sqrt(lp) - 2 quantization, sqrt(lp) + 2 quantization].
/// Checks use the dynamic value and replace it by the nearer end of that
/// bracket only when the bracket excludes it on the unfavourable side.
struct W2Estimate {
  double dynamic_sq = 0.0;
  /// NaN when the LP oracle was not run.
  double lp_sq = 0.0;
  bool has_lp = false;
  /// Root mean squared distance from a cell to its node, maximized over cells.
  double quantization = 0.0;
  TransportDiagnostics diagnostics;

  double lp_lower_sq() const;
  double lp_upper_sq() const;
  double low() const { return has_lp ? std::min(dynamic_sq, lp_upper_sq()) : dynamic_sq; }
  double high() const { return has_lp ? std::max(dynamic_sq, lp_lower_sq()) : dynamic_sq; }
  /// Value entering a slack RHS - LHS with coefficient c: low() if c > 0, high() otherwise.
  double conservative(double coefficient) const { return coefficient > 0.0 ? low() : high(); }
};

/// Bound on the root mean squared distance between a point of a cell and the
/// cell's node: sqrt(sum_a h_a^2 / 12) with h_a the largest arc spacing along axis a.
double quantization_radius(const ManifoldGrid& grid);

W2Estimate estimate_w2_sq(const FlowCheckContext& ctx, const DensityField& a, const DensityField& b);

/// State of the flow started at rho after time t.
DensityField flow(const FlowCheckContext& ctx, const DensityField& rho, double t);

/// e^{lambda (t1 - t0)}/2 W2^2(mu_t1, nu) - 1/2 W2^2(mu_t0, nu)
///   <= E_lambda(t1 - t0) (E(nu) - E(mu_t1)).
CheckReport check_evi_integral(const FlowCheckContext& ctx, const DensityField& mu0, const DensityField& nu, double t0,
                               double t1);

/// 1/2 D+ W2^2(nu, mu_t) + lambda/2 W2^2(nu, mu_t) <= E(nu) - E(mu_t), with the
/// Dini derivative from forward steps {1e-2, 1e-3} times the diffusion time
/// scale. The quotient uses the dynamic estimate; the LP quotient is recorded
/// only, since the node-to-node LP overestimates small displacements.
CheckReport check_evi_differential(const FlowCheckContext& ctx, const DensityField& mu0, const DensityField& nu,
                                   double t);

/// W2(mu_t, nu_t) <= e^{-lambda t} W2(mu, nu).
CheckReport check_contraction(const FlowCheckContext& ctx, const DensityField& mu, const DensityField& nu, double t);

/// E(mu_t) <= E(nu) + W2^2(mu0, nu) / (2 E_lambda(t)).
CheckReport check_regularization(const FlowCheckContext& ctx, const DensityField& mu0, const DensityField& nu,
                                 double t);

/// W2^2(mu_t1, mu_t0) <= 2 E_{-lambda}(t1 - t0) (E(mu_t0) - E_inf), E_inf = vol e(1 / vol).
CheckReport check_uniform_continuity(const FlowCheckContext& ctx, const DensityField& mu0, double t0, double t1);

/// E(mu^s) <= (1 - s) E(mu^0) + s E(mu^1) - lambda/2 s (1 - s) W2^2(mu^0, mu^1)
/// along the dynamic geodesic (solve_w2 then reparametrize), worst s reported.
CheckReport check_displacement_convexity(const FlowCheckContext& ctx, const DensityField& mu0,
                                         const DensityField& mu1, const std::vector<double>& s_samples);

/// Terms of the action derivative along the family rho~^s_t = S_{st}(rho^s) at
/// an interior s-node of the path.
struct ActionTerms {
  double s = 0.0;
  double t = 0.0;
  /// Centred differences: path spacing in s, dt_step = t * (s spacing) in t.
  double ds = 0.0;
  double dt_step = 0.0;
  double d_dt_half_action = 0.0;
  double d_ds_entropy = 0.0;
  double action = 0.0;
  /// -integral (|Hess phi|^2 + Ric(grad phi, grad phi)) U(rho).
  double dissipation_curvature = 0.0;
  /// -integral (lap phi)^2 (rho U'(rho) - U(rho)).
  double dissipation_pressure = 0.0;
  double dissipation() const { return dissipation_curvature + dissipation_pressure; }
};

/// Throws InvalidArgument unless s is an interior node of the path and t > 0.
ActionTerms action_terms(const FlowCheckContext& ctx, const TransportPath& path, double t, double s);

/// d/dt 1/2 A~ + d/ds E(rho~) = s D~ (identity; the report also records the
/// sign of D~, which must be <= 1e-9 when lambda >= 0 and the McCann
/// conditions hold).
CheckReport action_identity(const FlowCheckContext& ctx, const TransportPath& path, double t, double s);

/// 1/2 d/dt A~ + lambda s A~ + d/ds E(rho~) <= 0; log entropy only.
CheckReport check_lambda_action_inequality(const FlowCheckContext& ctx, const TransportPath& path, double t,
                                           double s);

/// Every forward increase of the sampled function is at most tolerance times
/// max(|zeta|, 1e-8).
CheckReport check_monotonicity_lemma(const std::map<double, double>& samples, double tolerance = 1e-10);

}  // namespace otflow
