#include "otflow/density.hpp"

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "otflow/error.hpp"

namespace otflow {
namespace {

constexpr double kPi = std::numbers::pi;

std::vector<double> parse_numbers(std::string_view text, std::string_view whole) {
  std::vector<double> out;
  if (text.empty()) return out;
  size_t start = 0;
  while (true) {
    const size_t comma = text.find(',', start);
    const std::string item(text.substr(start, comma == std::string_view::npos ? text.npos : comma - start));
    size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (item.empty() || used != item.size() || !std::isfinite(v))
      throw InvalidArgument(fmt::format("bad density spec '{}'", whole));
    out.push_back(v);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

// Cosine of the geodesic angle to a centre: periodic per axis on flat grids
// (product over axes is handled by the caller), great circle on the sphere.
double sphere_cos_distance(double theta, double phi, double tc, double pc) {
  return std::cos(theta) * std::cos(tc) + std::sin(theta) * std::sin(tc) * std::cos(phi - pc);
}

template <class Profile>
ScalarField centred_profile(const ManifoldGrid& grid, double a, double b, Profile&& profile) {
  const double period = grid.spec().side;
  return sample(grid, [&](const auto& p) {
    if (grid.kind() == ManifoldKind::sphere2) return profile(sphere_cos_distance(p[0], p[1], a, b), 2);
    double value = profile(std::cos(2.0 * kPi * (p[0] - a) / period), 1);
    if (grid.dim() == 2) value *= profile(std::cos(2.0 * kPi * (p[1] - b) / period), 1);
    return value;
  });
}

ScalarField bump(const ManifoldGrid& grid, double a, double b) {
  ScalarField f = centred_profile(grid, a, b, [](double c, int) { return (1.0 + c) * (1.0 + c); });
  return f.array() + 0.01;
}

ScalarField von_mises(const ManifoldGrid& grid, double kappa, double a, double b) {
  return centred_profile(grid, a, b, [kappa](double c, int) { return std::exp(kappa * (c - 1.0)); });
}

ScalarField random_field(const ManifoldGrid& grid, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto coeff = [&] { return 2.0 * unit_uniform(rng) - 1.0; };
  ScalarField f = ScalarField::Zero(grid.size());
  if (grid.kind() == ManifoldKind::sphere2) {
    double c[9];
    for (double& v : c) v = coeff();
    f = sample(grid, [&](const auto& p) {
      const double x = std::sin(p[0]) * std::cos(p[1]);
      const double y = std::sin(p[0]) * std::sin(p[1]);
      const double z = std::cos(p[0]);
      return c[0] * x + c[1] * y + c[2] * z + c[3] * x * y + c[4] * y * z + c[5] * x * z + c[6] * x * x +
             c[7] * y * y + c[8] * z * z;
    });
  } else {
    const double k0 = 2.0 * kPi / grid.spec().side;
    const int modes = 3;
    const int ky_max = grid.dim() == 2 ? modes : 0;
    for (int kx = 0; kx <= modes; ++kx) {
      for (int ky = 0; ky <= ky_max; ++ky) {
        if (kx == 0 && ky == 0) continue;
        const double ca = coeff() / (kx * kx + ky * ky);
        const double sa = coeff() / (kx * kx + ky * ky);
        f += sample(grid, [&](const auto& p) {
          const double arg = k0 * (kx * p[0] + (grid.dim() == 2 ? ky * p[1] : 0.0));
          return ca * std::cos(arg) + sa * std::sin(arg);
        });
      }
    }
  }
  f.array() -= grid.integrate(f) / grid.volume();
  const double amp = f.cwiseAbs().maxCoeff();
  if (amp > 0.0) f *= 0.5 / amp;
  return f.array() + 1.0;
}

}  // namespace

double unit_uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

void validate_density(const ManifoldGrid& grid, const ScalarField& rho, double mass_tol) {
  grid.check_shape(rho, "density");
  for (Eigen::Index i = 0; i < rho.size(); ++i)
    if (!(rho[i] > 0.0) || !std::isfinite(rho[i]))
      throw InvalidArgument(fmt::format("density is not strictly positive at node {} ({})", i, rho[i]));
  const double mass = grid.integrate(rho);
  if (std::abs(mass - 1.0) > mass_tol) throw InvalidArgument(fmt::format("density has mass {} (expected 1)", mass));
}

DensityField normalize(const ManifoldGrid& grid, const ScalarField& f) {
  grid.check_shape(f, "normalize");
  if (!(f.minCoeff() > 0.0)) throw InvalidArgument("cannot normalize a field with nonpositive values");
  return f / grid.integrate(f);
}

DensityField make_density(const ManifoldGrid& grid, std::string_view spec) {
  const size_t colon = spec.find(':');
  const std::string_view name = spec.substr(0, colon);
  const std::vector<double> args =
      colon == std::string_view::npos ? std::vector<double>{} : parse_numbers(spec.substr(colon + 1), spec);
  const bool sphere = grid.kind() == ManifoldKind::sphere2;
  auto centre_b = [&](size_t index, double a) { return args.size() > index ? args[index] : (sphere ? 0.0 : a); };

  if (name == "uniform" && args.empty()) return ScalarField::Constant(grid.size(), 1.0 / grid.volume());
  if (name == "bump" && (args.size() == 1 || args.size() == 2)) return normalize(grid, bump(grid, args[0], centre_b(1, args[0])));
  if (name == "two-bump" && args.size() == 2) {
    const ScalarField first = normalize(grid, bump(grid, args[0], sphere ? 0.0 : args[0]));
    const ScalarField second = normalize(grid, bump(grid, args[1], sphere ? kPi : args[1]));
    return normalize(grid, 0.5 * (first + second));
  }
  if (name == "vonmises" && (args.size() == 2 || args.size() == 3)) {
    if (!(args[0] > 0.0)) throw InvalidArgument("vonmises concentration must be positive");
    return normalize(grid, von_mises(grid, args[0], args[1], centre_b(2, args[1])));
  }
  if (name == "random" && args.size() == 1) {
    if (args[0] < 0.0 || args[0] != std::floor(args[0])) throw InvalidArgument("random seed must be a nonnegative integer");
    return normalize(grid, random_field(grid, static_cast<std::uint64_t>(args[0])));
  }
  throw InvalidArgument(fmt::format("unknown density '{}'", spec));
}

}  // namespace otflow
