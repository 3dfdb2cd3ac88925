#pragma once

#include <string>
#include <vector>

#include "otflow/density.hpp"
#include "otflow/manifold.hpp"

namespace otflow {

struct TransportParams {
  /// Number of s-intervals K (K + 1 stored slices).
  int slices = 16;
  /// Proximal step relative to the uniform density level 1 / volume.
  double gamma = 1.0;
  /// Douglas-Rachford relaxation in (0, 2).
  double relaxation = 1.0;
  /// Stop when the action changes by less than tolerance (relative) over `window` iterations.
  double tolerance = 1e-7;
  int window = 50;
  int max_iter = 20000;
  /// Interior slices are clamped to this level before the potentials are recovered.
  double density_floor = 1e-9;
  /// Relative residual of the elliptic potential solves.
  double potential_tol = 1e-9;
};

struct TransportDiagnostics {
  int iterations = 0;
  bool converged = false;
  /// Action of the splitting variables, integral of |m|^2 / rho over the s-cells.
  double momentum_action = 0.0;
  /// Largest relative weighted L2 norm of d_s rho + div(rho grad phi) at the
  /// s-nodes, d_s rho by centred differences (one-sided at the endpoints).
  double continuity_residual = 0.0;
  /// Node values raised to the density floor.
  int floor_hits = 0;
  /// Smallest interior density before flooring.
  double min_density = 0.0;
};

/// Density curve with its velocity potentials on a uniform s-partition of [0, 1].
struct TransportPath {
  std::vector<double> s_nodes;
  std::vector<DensityField> rho;
  /// Zero-mean potentials: d_s rho + div(rho grad phi) = 0.
  std::vector<ScalarField> phi;
  /// A^s = integral of |grad phi^s|^2 rho^s at every slice.
  std::vector<double> action_per_s;
  /// Trapezoid rule of action_per_s over s.
  double w2_sq_estimate = 0.0;
  TransportDiagnostics diagnostics;

  int slices() const { return static_cast<int>(rho.size()) - 1; }
};

/// Zero-mean phi with -div(rho grad phi) = drho, by preconditioned conjugate
/// gradients. Components of drho in the kernel of the grid gradient (the
/// constant and, on even spectral grids, the unresolved Nyquist modes) are
/// projected out first.
struct PotentialSolution {
  ScalarField phi;
  /// Weighted L2 norm of div(rho grad phi) + drho relative to that of drho.
  double relative_residual = 0.0;
  int iterations = 0;
  bool converged = false;
};

PotentialSolution solve_potential_detailed(const ManifoldGrid& grid, const DensityField& rho, const ScalarField& drho,
                                           double tol = 1e-9, int max_iter = 2000);

/// Throws InvalidArgument if drho is not mean-zero (to 1e-10) or rho is not
/// positive, SolverFailure if the solve does not reach tol.
ScalarField solve_potential(const ManifoldGrid& grid, const DensityField& rho, const ScalarField& drho,
                            double tol = 1e-9);

/// Dynamic W2 between two densities: minimizes the integral of |m|^2 / rho
/// subject to d_s rho + div m = 0 with Douglas-Rachford splitting. rho lives at
/// s-nodes, m at s-cell midpoints on the grid faces; the continuity constraint
/// is projected exactly per Laplacian eigenmode. Potentials are recovered from
/// the momentum with solve_potential. Throws SolverFailure if the stopping rule
/// is not met within max_iter.
TransportPath solve_w2(const ManifoldGrid& grid, const DensityField& mu0, const DensityField& mu1,
                       const TransportParams& params = {});

/// dirichlet_energy(rho^s, phi^s) for every slice.
std::vector<double> action(const ManifoldGrid& grid, const TransportPath& path);

/// Trapezoid rule over the path's s-nodes.
double total_action(const TransportPath& path);

/// Constant-speed reparametrization: r(s) = L^{-1} int_0^s sqrt(eps^2 + A),
/// L = int_0^1 sqrt(eps^2 + A), with A linear between the stored slices (the
/// integral and its inverse are evaluated in closed form). The output has
/// slices at uniform r, rho(r) = rho(s(r)), phi(r) = s'(r) phi(s(r)) and
/// action L^2 A / (eps^2 + A) at s(r).
TransportPath reparametrize(const ManifoldGrid& grid, const TransportPath& path, double eps);

/// Map r -> s of the reparametrization above, evaluated at the given r values.
std::vector<double> reparametrization_times(const std::vector<double>& s_nodes, const std::vector<double>& action,
                                            double eps, const std::vector<double>& r_values, double* length = nullptr);

/// Linear interpolation between the stored slices; s must lie in [0, 1].
DensityField interpolate(const TransportPath& path, double s);

/// One CSV row per (slice, node): s,node,<coordinates>,rho,phi.
std::string path_csv(const ManifoldGrid& grid, const TransportPath& path);

}  // namespace otflow
