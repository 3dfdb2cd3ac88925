#pragma once

#include <string>
#include <string_view>

#include "otflow/check_report.hpp"
#include "otflow/manifold.hpp"

namespace otflow {

enum class EntropyKind { log, power };

/// Internal-energy density e and its pressure U(r) = r e'(r) - (e(r) - e(0+)).
///
///   log:    e = r log r,        U = r
///   power:  e = r^m / (m - 1),  U = r^m   (m > 0, m != 1)
class EntropyModel {
 public:
  static EntropyModel log();
  static EntropyModel power(double m);

  /// "log" or "power:m=<real>".
  static EntropyModel parse(std::string_view text);

  EntropyKind kind() const { return kind_; }
  double exponent() const { return m_; }

  double e(double r) const;
  double de(double r) const;
  double u(double r) const;
  double du(double r) const;

  /// e(0+).
  double e_at_zero() const { return 0.0; }
  /// lim e'(r) as r -> infinity: +inf for superlinear models. Metadata only.
  double e_prime_at_infinity() const;
  bool superlinear() const { return kind_ == EntropyKind::log || m_ > 1.0; }

  /// r U'(r) - U(r); vanishes identically for the log model.
  double pressure_excess(double r) const { return r * du(r) - u(r); }

  std::string str() const;

 private:
  EntropyModel(EntropyKind kind, double m) : kind_(kind), m_(m) {}

  EntropyKind kind_;
  double m_;
};

EntropyModel make_entropy(EntropyKind kind, double m = 2.0);

/// Samples U >= 0 and r U'(r) - (1 - 1/n) U(r) >= 0 on 512 log-spaced points of
/// [1e-6, 1e6]. Margins are normalized by |r U'(r)| + |U(r)|, so they are scale
/// free for both families.
CheckReport check_mccann(const EntropyModel& model, int n);

/// Integral of e(rho) over the grid. Throws InvalidArgument on a nonpositive node.
double evaluate(const EntropyModel& model, const ManifoldGrid& grid, const ScalarField& rho);

/// Lower bound vol * e(1 / vol) of the entropy over unit-mass densities.
double entropy_infimum(const EntropyModel& model, const ManifoldGrid& grid);

}  // namespace otflow
