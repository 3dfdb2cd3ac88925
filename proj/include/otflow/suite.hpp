#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "otflow/check_report.hpp"
#include "otflow/evi.hpp"

namespace otflow {

/// Everything a run depends on. The output directory and the worker count are
/// not part of it: they do not change results.
struct RunConfig {
  std::string manifold = "circle:64";
  std::string entropy = "log";
  std::optional<double> lambda;
  std::string mu0 = "bump:0.2";
  std::string mu1 = "bump:0.6";
  double t = 0.01;
  double t0 = 0.0;
  double t1 = 0.01;
  double s = 0.5;
  std::vector<double> s_samples = {0.25, 0.5, 0.75};
  int slices = 16;
  double gamma = 1.0;
  double dr_tolerance = 1e-7;
  int max_iter = 20000;
  /// 0 selects the per-command default step.
  double dt = 0.0;
  int min_steps = 64;
  /// Relative check tolerance; 0 keeps 5e-3 (flat) / 5e-2 (sphere).
  double check_tolerance = 0.0;
  /// Smoothing of the constant-speed reparametrization.
  double eps = 1e-3;
  std::uint64_t seed = 1;
  /// Dimension of the McCann conditions; 0 uses the manifold dimension.
  int dim = 0;
  int save_every = 1;

  /// Unknown keys and wrongly typed values throw InvalidArgument. Missing keys keep `base`.
  static RunConfig from_json(const nlohmann::json& j, const RunConfig& base);
  nlohmann::json to_json() const;
  /// FNV-1a digest of the canonical JSON dump.
  std::string digest() const;

  std::shared_ptr<const ManifoldGrid> grid() const;
  EntropyModel model() const;
  TransportParams transport() const;
  FlowCheckContext context() const;
};

/// Bochner residual of f against an absolute tolerance: the maximum over nodes
/// on flat grids, the weighted L2 norm on the sphere (the residual is O(1) on
/// the rows next to the poles, where the third derivatives of the
/// latitude-longitude stencils lose consistency, but converges in L2).
CheckReport check_bochner(const ManifoldGrid& grid, const ScalarField& f, double tolerance);

/// (lap f)^2 <= n |Hess f|^2 + tolerance at every node.
CheckReport check_hessian_trace_bound(const ManifoldGrid& grid, const ScalarField& f, double tolerance);

/// Smooth test potential: a random trigonometric polynomial with modes below a
/// quarter of the resolution (flat), a random quadratic polynomial in the
/// ambient coordinates (sphere). Coefficients are uniform in [-1, 1]. A
/// positive `max_mode` drops flat modes above it.
ScalarField smooth_test_field(const ManifoldGrid& grid, std::uint64_t seed, int max_mode = 0);

/// rho^s = (1 - s) mu0 + s mu1 on K + 1 uniform s-nodes, with its potentials.
TransportPath mixture_path(const ManifoldGrid& grid, const DensityField& mu0, const DensityField& mu1, int slices);

struct NamedCheck {
  std::string label;
  std::function<CheckReport()> run;
};

/// Checks of the full battery for one configuration: McCann conditions,
/// Bochner identity and trace bound, semigroup and entropy monotonicity of the
/// flow, both EVI forms, contraction, regularization, uniform continuity,
/// displacement convexity, action identity and (log entropy) the
/// lambda-action inequality.
std::vector<NamedCheck> suite_checks(const RunConfig& config);

struct RunOutcome {
  /// Ordered by label.
  std::vector<CheckReport> reports;
  std::vector<std::string> labels;
  bool solver_failure = false;

  /// 0 all pass, 1 a check failed, 3 a solver failed.
  int exit_code() const;
};

/// Runs the checks on up to `workers` threads. A SolverFailure becomes a
/// failing report carrying the message.
RunOutcome run_checks(const std::vector<NamedCheck>& checks, int workers = 1);

}  // namespace otflow
