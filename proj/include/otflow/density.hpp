#pragma once

#include <cstdint>
#include <random>
#include <string_view>

#include "otflow/manifold.hpp"

namespace otflow {

/// Strictly positive node values with unit total mass under the grid quadrature.
using DensityField = ScalarField;

/// Throws InvalidArgument unless rho is finite, strictly positive and has mass
/// 1 within mass_tol.
void validate_density(const ManifoldGrid& grid, const ScalarField& rho, double mass_tol = 1e-10);

/// Rescales a positive field to unit mass.
DensityField normalize(const ManifoldGrid& grid, const ScalarField& f);

/// Named density generators:
///   uniform
///   bump:<a>[,<b>]             ((1 + cos)^2 + 0.01), centred at x = a (circle),
///                              (a, b) (torus) or (theta, phi) = (a, b) (sphere)
///   two-bump:<c1>,<c2>         average of two bumps (torus: diagonal centres; sphere:
///                              colatitudes c1, c2 at longitudes 0 and pi)
///   vonmises:<kappa>,<a>[,<b>] exp(kappa (cos - 1)) profile around the same centres
///   random:<seed>              positive band-limited perturbation of uniform
/// Centres are chart coordinates; on the torus b defaults to a, on the sphere to 0.
DensityField make_density(const ManifoldGrid& grid, std::string_view spec);

/// Uniform double in [0, 1) from a mt19937_64 draw (bit-exact across platforms,
/// unlike the standard distributions).
double unit_uniform(std::mt19937_64& rng);

}  // namespace otflow
