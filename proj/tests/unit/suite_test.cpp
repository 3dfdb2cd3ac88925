#include <cmath>
#include <complex>
#include <numbers>
#include <set>
#include <string>

#include <gtest/gtest.h>

#include "otflow/density.hpp"
#include "otflow/error.hpp"
#include "otflow/manifold.hpp"
#include "otflow/suite.hpp"

namespace otflow {
namespace {

RunConfig small_config() {
  RunConfig c;
  c.manifold = "circle:32";
  return c;
}

TEST(RunConfig, JsonRoundTripKeepsEveryField) {
  RunConfig c;
  c.manifold = "torus:16";
  c.entropy = "power:m=2";
  c.lambda = 0.5;
  c.s_samples = {0.1, 0.9};
  c.seed = 7;
  c.min_steps = 128;
  const RunConfig back = RunConfig::from_json(c.to_json(), RunConfig{});
  EXPECT_EQ(back.to_json().dump(), c.to_json().dump());
  EXPECT_EQ(back.digest(), c.digest());
}

TEST(RunConfig, MissingKeysKeepTheBase) {
  RunConfig base;
  base.t = 0.3;
  const RunConfig c = RunConfig::from_json(nlohmann::json{{"seed", 5}}, base);
  EXPECT_EQ(c.t, 0.3);
  EXPECT_EQ(c.seed, 5u);
}

TEST(RunConfig, RejectsUnknownKeysAndBadTypes) {
  EXPECT_THROW(RunConfig::from_json(nlohmann::json{{"manifld", "circle:64"}}, RunConfig{}), InvalidArgument);
  EXPECT_THROW(RunConfig::from_json(nlohmann::json{{"t", "soon"}}, RunConfig{}), InvalidArgument);
  EXPECT_THROW(RunConfig::from_json(nlohmann::json::array(), RunConfig{}), InvalidArgument);
}

TEST(RunConfig, DigestChangesWithAnyField) {
  RunConfig a;
  RunConfig b;
  EXPECT_EQ(a.digest(), b.digest());
  b.seed = 2;
  EXPECT_NE(a.digest(), b.digest());
  b = a;
  b.mu1 = "bump:0.7";
  EXPECT_NE(a.digest(), b.digest());
}

TEST(Bochner, HoldsToRoundoffOnTorus) {
  const ManifoldGrid grid(ManifoldSpec::torus(32, 32));
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const ScalarField f = smooth_test_field(grid, seed);
    const double scale = hessian_norm_sq(grid, f).maxCoeff();
    const CheckReport r = check_bochner(grid, f, 1e-12 * scale);
    EXPECT_TRUE(r.pass) << r.slack << " " << scale;
    EXPECT_EQ(r.kind, CheckKind::identity);
  }
}

TEST(Bochner, LowModeFieldMeetsAbsoluteBudget) {
  const ManifoldGrid grid(ManifoldSpec::torus(32, 32));
  const CheckReport r = check_bochner(grid, smooth_test_field(grid, 1, 4), 1e-6);
  EXPECT_TRUE(r.pass) << r.slack;
}

TEST(Bochner, SphereResidualConvergesInL2) {
  const ManifoldGrid coarse(ManifoldSpec::sphere(12, 24));
  const ManifoldGrid fine(ManifoldSpec::sphere(24, 48));
  const double r0 = check_bochner(coarse, smooth_test_field(coarse, 1), 1.0).measured.at("l2_residual");
  const double r1 = check_bochner(fine, smooth_test_field(fine, 1), 1.0).measured.at("l2_residual");
  EXPECT_LT(r1, 0.6 * r0);
}

TEST(HessianTraceBound, HoldsForRandomPotentials) {
  const ManifoldGrid grid(ManifoldSpec::torus(32, 32));
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const ScalarField f = smooth_test_field(grid, seed);
    const double scale = std::max(1.0, hessian_norm_sq(grid, f).maxCoeff());
    const CheckReport r = check_hessian_trace_bound(grid, f, 1e-12 * scale);
    EXPECT_TRUE(r.pass) << seed << " " << r.slack;
  }
}

TEST(HessianTraceBound, EqualityInOneDimension) {
  // On the circle (lap f)^2 = |Hess f|^2 at every node.
  const ManifoldGrid grid(ManifoldSpec::circle(32));
  const ScalarField f = smooth_test_field(grid, 4);
  const double scale = std::max(1.0, hessian_norm_sq(grid, f).maxCoeff());
  const CheckReport r = check_hessian_trace_bound(grid, f, 1e-12 * scale);
  EXPECT_TRUE(r.pass);
  EXPECT_NEAR(r.slack, 0.0, 1e-12 * scale);
}

TEST(SmoothTestField, IsDeterministicInTheSeed) {
  const ManifoldGrid grid(ManifoldSpec::torus(16, 16));
  EXPECT_EQ(smooth_test_field(grid, 3), smooth_test_field(grid, 3));
  EXPECT_NE(smooth_test_field(grid, 3), smooth_test_field(grid, 4));
}

TEST(SmoothTestField, ModeCapLimitsTheSpectrum) {
  const int n = 64;
  const ManifoldGrid grid(ManifoldSpec::circle(n));
  const ScalarField f = smooth_test_field(grid, 2, 2);
  auto coefficient = [&](int k) {
    std::complex<double> acc = 0.0;
    for (int j = 0; j < n; ++j) acc += f[j] * std::polar(1.0, -2.0 * std::numbers::pi * k * j / n);
    return std::abs(acc) / n;
  };
  for (int k = 3; k <= n / 2; ++k) EXPECT_LT(coefficient(k), 1e-12) << k;
  EXPECT_GT(coefficient(2), 1e-6);
}

TEST(MixturePath, InterpolatesLinearlyAndSolvesContinuity) {
  const ManifoldGrid grid(ManifoldSpec::circle(32));
  const DensityField a = make_density(grid, "bump:0.2");
  const DensityField b = make_density(grid, "bump:0.6");
  const TransportPath p = mixture_path(grid, a, b, 8);
  ASSERT_EQ(p.rho.size(), 9u);
  EXPECT_EQ(p.rho.front(), a);
  EXPECT_LT((p.rho.back() - b).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_LT((p.rho[4] - 0.5 * (a + b)).cwiseAbs().maxCoeff(), 1e-14);
  ASSERT_EQ(p.phi.size(), p.rho.size());
}

TEST(Suite, CircleLogBatteryPassesAndCoversEveryCheck) {
  const RunOutcome out = run_checks(suite_checks(small_config()), 1);
  const std::set<std::string> labels(out.labels.begin(), out.labels.end());
  for (const char* name : {"mccann_conditions", "bochner_identity", "hessian_trace_bound", "semigroup",
                           "entropy_monotonicity", "evi_integral", "evi_differential", "contraction",
                           "regularization", "uniform_continuity", "displacement_convexity", "action_identity",
                           "lambda_action_inequality"})
    EXPECT_TRUE(labels.count(name)) << name;
  for (const CheckReport& r : out.reports) EXPECT_TRUE(r.pass) << r.name << " " << r.slack << " " << r.tolerance;
  EXPECT_EQ(out.exit_code(), 0);
  EXPECT_TRUE(std::is_sorted(out.labels.begin(), out.labels.end()));
}

TEST(Suite, PowerModelsSkipTheLambdaActionInequality) {
  RunConfig c = small_config();
  c.entropy = "power:m=2";
  for (const NamedCheck& check : suite_checks(c)) EXPECT_NE(check.label, "lambda_action_inequality");
}

TEST(Suite, ReportsAreIdenticalAcrossWorkerCounts) {
  const std::vector<NamedCheck> checks = suite_checks(small_config());
  const RunOutcome one = run_checks(checks, 1);
  const RunOutcome three = run_checks(checks, 3);
  ASSERT_EQ(one.reports.size(), three.reports.size());
  for (size_t i = 0; i < one.reports.size(); ++i)
    EXPECT_EQ(to_json(one.reports[i]).dump(), to_json(three.reports[i]).dump()) << one.labels[i];
}

TEST(RunChecks, ExitCodes) {
  auto report = [](bool pass) {
    CheckReport r;
    r.name = "x";
    r.slack = pass ? 0.0 : -1.0;
    r.tolerance = 0.5;
    r.finalize();
    return r;
  };
  EXPECT_EQ(run_checks({{"a", [&] { return report(true); }}}).exit_code(), 0);
  EXPECT_EQ(run_checks({{"a", [&] { return report(true); }}, {"b", [&] { return report(false); }}}).exit_code(), 1);
  auto stalled = []() -> CheckReport { throw SolverFailure("stalled"); };
  const RunOutcome failed = run_checks({{"a", [&] { return report(false); }}, {"b", stalled}});
  EXPECT_EQ(failed.exit_code(), 3);
  EXPECT_TRUE(failed.solver_failure);
  ASSERT_EQ(failed.reports.size(), 2u);
  EXPECT_FALSE(failed.reports[1].pass);
  ASSERT_FALSE(failed.reports[1].notes.empty());
  EXPECT_NE(failed.reports[1].notes.front().find("stalled"), std::string::npos);
}

}  // namespace
}  // namespace otflow
