#include "otflow/entropy.hpp"

#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "otflow/error.hpp"

namespace otflow {

EntropyModel EntropyModel::log() { return {EntropyKind::log, 1.0}; }

EntropyModel EntropyModel::power(double m) {
  if (!std::isfinite(m) || !(m > 0.0) || m == 1.0)
    throw InvalidArgument(fmt::format("power entropy needs m > 0 and m != 1, got {}", m));
  return {EntropyKind::power, m};
}

EntropyModel EntropyModel::parse(std::string_view text) {
  if (text == "log") return log();
  constexpr std::string_view prefix = "power:";
  if (text.substr(0, prefix.size()) == prefix) {
    std::string_view rest = text.substr(prefix.size());
    if (rest.substr(0, 2) == "m=") rest = rest.substr(2);
    const std::string value(rest);
    size_t used = 0;
    double m = 0.0;
    try {
      m = std::stod(value, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (value.empty() || used != value.size()) throw InvalidArgument(fmt::format("bad entropy spec '{}'", text));
    return power(m);
  }
  throw InvalidArgument(fmt::format("unknown entropy '{}' (expected log or power:m=<real>)", text));
}

double EntropyModel::e(double r) const {
  if (kind_ == EntropyKind::log) return r > 0.0 ? r * std::log(r) : 0.0;
  return std::pow(r, m_) / (m_ - 1.0);
}

double EntropyModel::de(double r) const {
  if (kind_ == EntropyKind::log) return std::log(r) + 1.0;
  return m_ / (m_ - 1.0) * std::pow(r, m_ - 1.0);
}

double EntropyModel::u(double r) const {
  if (kind_ == EntropyKind::log) return r;
  return std::pow(r, m_);
}

double EntropyModel::du(double r) const {
  if (kind_ == EntropyKind::log) return 1.0;
  return m_ * std::pow(r, m_ - 1.0);
}

double EntropyModel::e_prime_at_infinity() const {
  return superlinear() ? std::numeric_limits<double>::infinity() : 0.0;
}

std::string EntropyModel::str() const {
  if (kind_ == EntropyKind::log) return "log";
  return fmt::format("power:m={}", m_);
}

EntropyModel make_entropy(EntropyKind kind, double m) {
  return kind == EntropyKind::log ? EntropyModel::log() : EntropyModel::power(m);
}

CheckReport check_mccann(const EntropyModel& model, int n) {
  if (n < 1) throw InvalidArgument("dimension must be >= 1");
  CheckReport report;
  report.name = "mccann_conditions";
  report.property = "U(r) >= 0 and r U'(r) - (1 - 1/n) U(r) >= 0 for all r > 0";
  report.kind = CheckKind::inequality;
  report.inputs_digest = Digest().add(model.str()).add(static_cast<std::int64_t>(n)).hex();
  report.tolerance = 1e-12;

  constexpr int kSamples = 512;
  const double lo = std::log(1e-6);
  const double hi = std::log(1e6);
  double worst_pressure = std::numeric_limits<double>::infinity();
  double worst_displacement = std::numeric_limits<double>::infinity();
  double worst_pressure_at = 0.0;
  double worst_displacement_at = 0.0;
  for (int i = 0; i < kSamples; ++i) {
    const double r = std::exp(lo + (hi - lo) * i / (kSamples - 1));
    const double u = model.u(r);
    const double rdu = r * model.du(r);
    const double scale = std::abs(rdu) + std::abs(u);
    const double pressure = u / scale;
    const double displacement = (rdu - (1.0 - 1.0 / n) * u) / scale;
    if (pressure < worst_pressure) {
      worst_pressure = pressure;
      worst_pressure_at = r;
    }
    if (displacement < worst_displacement) {
      worst_displacement = displacement;
      worst_displacement_at = r;
    }
  }
  report.measured["dimension"] = n;
  report.measured["worst_pressure_margin"] = worst_pressure;
  report.measured["worst_pressure_at"] = worst_pressure_at;
  report.measured["worst_displacement_margin"] = worst_displacement;
  report.measured["worst_displacement_at"] = worst_displacement_at;
  report.measured["samples"] = kSamples;
  report.slack = std::min(worst_pressure, worst_displacement);
  report.finalize();
  if (worst_pressure < -report.tolerance)
    report.notes.push_back(fmt::format("violated: U(r) >= 0 at r = {}", format_double(worst_pressure_at)));
  if (worst_displacement < -report.tolerance)
    report.notes.push_back(fmt::format("violated: r U'(r) - (1 - 1/n) U(r) >= 0 at r = {} (n = {})",
                                       format_double(worst_displacement_at), n));
  if (n == 1) report.notes.push_back("dimension 1: conditions evaluated with n = 1; they are stated for n > 1");
  return report;
}

double evaluate(const EntropyModel& model, const ManifoldGrid& grid, const ScalarField& rho) {
  grid.check_shape(rho, "evaluate");
  double sum = 0.0;
  for (Eigen::Index i = 0; i < rho.size(); ++i) {
    if (!(rho[i] > 0.0) || !std::isfinite(rho[i]))
      throw InvalidArgument(fmt::format("density is not strictly positive at node {} ({})", i, rho[i]));
    sum += grid.weights()[i] * model.e(rho[i]);
  }
  return sum;
}

double entropy_infimum(const EntropyModel& model, const ManifoldGrid& grid) {
  return grid.volume() * model.e(1.0 / grid.volume());
}

}  // namespace otflow
