#include <cmath>
#include <map>
#include <memory>
#include <numbers>

#include <gtest/gtest.h>

#include "otflow/error.hpp"
#include "otflow/evi.hpp"

namespace otflow {
namespace {

constexpr double kPi = std::numbers::pi;

std::shared_ptr<const ManifoldGrid> circle(int n) {
  return std::make_shared<const ManifoldGrid>(build_grid(ManifoldSpec::circle(n)));
}

// Smooth bump carried around the circle at speed d, sampled at K + 1 uniform s
// nodes; phi solves the continuity equation with d_s rho = -d rho'.
TransportPath translation_path(const ManifoldGrid& g, int k_total, double d) {
  TransportPath path;
  for (int k = 0; k <= k_total; ++k) {
    const double s = static_cast<double>(k) / k_total;
    const ScalarField rho =
        sample(g, [&](const auto& p) { return std::exp(2.0 * std::cos(2.0 * kPi * (p[0] - 0.3 - d * s))); });
    path.s_nodes.push_back(s);
    path.rho.push_back(normalize(g, rho));
    path.phi.push_back(solve_potential(g, path.rho[k], -d * g.partial(0, path.rho[k])));
  }
  path.action_per_s = action(g, path);
  path.w2_sq_estimate = total_action(path);
  return path;
}

double simpson(const std::function<double(double)>& f, double a, double b, int panels) {
  const double h = (b - a) / panels;
  double sum = f(a) + f(b);
  for (int i = 1; i < panels; ++i) sum += f(a + i * h) * (i % 2 == 1 ? 4.0 : 2.0);
  return sum * h / 3.0;
}

TEST(Growth, ELambdaExamples) {
  EXPECT_DOUBLE_EQ(e_lambda(0.0, 2.0), 2.0);
  EXPECT_DOUBLE_EQ(e_lambda(0.0, 0.7), 0.7);
  EXPECT_NEAR(e_lambda(1e-12, 1.0), 1.0, 1e-9);
  EXPECT_NEAR(e_lambda(1.0, 1.0), std::numbers::e - 1.0, 1e-15);
  EXPECT_NEAR(e_lambda(-1.0, 1.0), 1.0 - 1.0 / std::numbers::e, 1e-15);
  EXPECT_NEAR(e_lambda(2.0, 0.5), (std::numbers::e - 1.0) / 2.0, 1e-15);
  // Continuous across the series branch.
  EXPECT_NEAR(e_lambda(1e-6, 3.0), 3.0 * (1.0 + 1.5e-6 + 1.5e-12), 1e-15);
  EXPECT_NEAR(e_lambda(-2e-5, 1.0), std::expm1(-2e-5) / -2e-5, 1e-16);
}

TEST(Growth, ELambdaMatchesQuadrature) {
  for (double lambda : {-3.0, -0.5, 0.0, 0.7, 2.0})
    for (double t : {0.1, 1.0, 2.5})
      EXPECT_NEAR(e_lambda(lambda, t), simpson([&](double r) { return std::exp(lambda * r); }, 0.0, t, 2000),
                  1e-11 * std::max(1.0, e_lambda(lambda, t)));
}

TEST(Growth, SinhRatioExamplesAndEvenness) {
  EXPECT_EQ(sinh_ratio(0.0), 1.0);
  EXPECT_NEAR(sinh_ratio(1.0), 1.0 / std::sinh(1.0), 1e-15);
  EXPECT_NEAR(sinh_ratio(2.0), 2.0 / std::sinh(2.0), 1e-15);
  EXPECT_NEAR(sinh_ratio(1e-3), 1e-3 / std::sinh(1e-3), 1e-15);
  for (double t : {1e-6, 5e-5, 0.3, 1.0, 4.0}) EXPECT_EQ(sinh_ratio(t), sinh_ratio(-t));
}

TEST(Growth, ExponentialAverageEqualsSinhForm) {
  // integral_0^1 e^{-2 lambda s t} ds = 1 / (e^{lambda t} sinh_ratio(lambda t)).
  for (double x : {-1.0, -0.5, 0.5, 1.0}) {
    const double quad = simpson([&](double s) { return std::exp(-2.0 * x * s); }, 0.0, 1.0, 2000);
    EXPECT_NEAR(quad, 1.0 / (std::exp(x) * sinh_ratio(x)), 1e-12) << x;
  }
}

TEST(Dini, LargestQuotientOfTwoSmallestSteps) {
  std::map<double, double> f;
  for (double t : {0.5, 1.0, 1.01, 1.1, 2.0}) f[t] = t * t;
  const DiniEstimate d = dini_upper(f, 1.0);
  EXPECT_NEAR(d.value, 2.1, 1e-12);
  ASSERT_EQ(d.steps.size(), 2u);
  EXPECT_NEAR(d.steps[0], 0.01, 1e-15);
  EXPECT_NEAR(d.steps[1], 0.1, 1e-15);
  // Concave samples take the small step.
  std::map<double, double> g;
  for (double t : {0.0, 0.01, 0.1}) g[t] = -t * t;
  EXPECT_NEAR(dini_upper(g, 0.0).value, -0.01, 1e-12);
}

TEST(Dini, SpecialSamples) {
  std::map<double, double> square, constant, kink;
  for (double t : {1.0, 1.001, 1.01}) square[t] = t * t;
  for (double t : {0.0, 1e-3, 1e-2}) {
    constant[t] = 4.0;
    kink[t] = std::abs(t);
  }
  EXPECT_NEAR(dini_upper(square, 1.0).value, 2.0, 2e-2);
  EXPECT_EQ(dini_upper(constant, 0.0).value, 0.0);
  EXPECT_NEAR(dini_upper(kink, 0.0).value, 1.0, 1e-12);
}

TEST(Dini, RejectsMissingSamples) {
  std::map<double, double> f{{0.0, 1.0}, {0.1, 2.0}};
  EXPECT_THROW(dini_upper(f, 0.0), InvalidArgument);
  f[0.2] = 3.0;
  EXPECT_THROW(dini_upper(f, 0.05), InvalidArgument);
  EXPECT_NO_THROW(dini_upper(f, 0.0));
}

TEST(Monotonicity, Examples) {
  EXPECT_TRUE(check_monotonicity_lemma({{0.0, 3.0}, {0.5, 2.0}, {1.0, 1.5}}).pass);
  EXPECT_TRUE(check_monotonicity_lemma({{0.0, 1.0}, {1.0, 1.0}, {2.0, 1.0}}).pass);
  const CheckReport up = check_monotonicity_lemma({{0.0, 1.0}, {1.0, 0.5}, {2.0, 0.501}});
  EXPECT_FALSE(up.pass);
  EXPECT_NEAR(up.measured.at("max_increase"), 1e-3, 1e-15);
  EXPECT_NEAR(up.slack, -1e-3, 1e-15);
  // Roundoff-sized increases are tolerated relative to the sample scale.
  EXPECT_TRUE(check_monotonicity_lemma({{0.0, 1e3}, {1.0, 1e3 + 1e-8}}).pass);
  EXPECT_THROW(check_monotonicity_lemma({{0.0, 1.0}}), InvalidArgument);
}

TEST(Context, LambdaAndTolerancePolicy) {
  const FlowCheckContext flat = FlowCheckContext::make(circle(32), EntropyModel::log());
  EXPECT_EQ(flat.lambda, 0.0);
  EXPECT_FALSE(flat.lambda_overridden);
  EXPECT_EQ(flat.relative_tolerance(), 5e-3);
  EXPECT_NEAR(flat.diffusion_time_scale(), 1.0 / (4.0 * kPi * kPi), 1e-12);
  EXPECT_NEAR(flat.time_step(0.64), 0.01, 1e-15);
  const auto sphere = std::make_shared<const ManifoldGrid>(build_grid(ManifoldSpec::sphere(8, 16)));
  FlowCheckContext curved = FlowCheckContext::make(sphere, EntropyModel::log(), 0.5);
  EXPECT_EQ(curved.lambda, 0.5);
  EXPECT_TRUE(curved.lambda_overridden);
  EXPECT_EQ(curved.relative_tolerance(), 5e-2);
  curved.tolerance.override_value = 1e-3;
  EXPECT_EQ(curved.relative_tolerance(), 1e-3);
  EXPECT_THROW(FlowCheckContext::make(nullptr, EntropyModel::log()), InvalidArgument);
}

TEST(Estimate, ConservativeSelection) {
  W2Estimate w;
  w.dynamic_sq = 0.2;
  EXPECT_EQ(w.conservative(1.0), 0.2);
  w.lp_sq = 0.3;
  w.has_lp = true;
  EXPECT_EQ(w.conservative(0.5), 0.2);
  EXPECT_DOUBLE_EQ(w.conservative(-0.5), 0.3);
  EXPECT_DOUBLE_EQ(w.conservative(0.0), 0.3);
}

TEST(Estimate, QuantizationBracketOverridesOnlyWhenItExcludesTheDynamicValue) {
  W2Estimate w;
  w.has_lp = true;
  w.quantization = 0.05;
  w.lp_sq = 0.04;  // sqrt = 0.2, bracket [0.1, 0.3]
  EXPECT_DOUBLE_EQ(w.lp_lower_sq(), 0.01);
  EXPECT_DOUBLE_EQ(w.lp_upper_sq(), 0.09);
  w.dynamic_sq = 0.02;
  EXPECT_EQ(w.low(), 0.02);
  EXPECT_EQ(w.high(), 0.02);
  w.dynamic_sq = 0.005;
  EXPECT_DOUBLE_EQ(w.high(), 0.01);
  EXPECT_EQ(w.low(), 0.005);
  w.dynamic_sq = 0.1;
  EXPECT_DOUBLE_EQ(w.low(), 0.09);
  EXPECT_EQ(w.high(), 0.1);
  w.lp_sq = 0.0001;
  EXPECT_EQ(w.lp_lower_sq(), 0.0);
}

TEST(Estimate, QuantizationRadius) {
  EXPECT_DOUBLE_EQ(quantization_radius(ManifoldGrid(ManifoldSpec::circle(16))), 1.0 / 16.0 / std::sqrt(12.0));
  EXPECT_DOUBLE_EQ(quantization_radius(ManifoldGrid(ManifoldSpec::torus(8, 16, 2.0))),
                   std::sqrt((0.25 * 0.25 + 0.125 * 0.125) / 12.0));
  const double h = std::numbers::pi / 12.0;
  EXPECT_DOUBLE_EQ(quantization_radius(ManifoldGrid(ManifoldSpec::sphere(12, 24))), std::sqrt(2.0 * h * h / 12.0));
}

TEST(Estimate, LpBracketContainsDynamicValueOnTorus) {
  const FlowCheckContext ctx = FlowCheckContext::make(
      std::make_shared<const ManifoldGrid>(ManifoldSpec::torus(16, 16)), EntropyModel::log());
  const DensityField a = make_density(ctx.g(), "random:1");
  const DensityField b = flow(ctx, a, 0.01);
  const W2Estimate w = estimate_w2_sq(ctx, a, b);
  ASSERT_TRUE(w.has_lp);
  EXPECT_GT(w.lp_sq, 2.0 * w.dynamic_sq);
  EXPECT_LE(w.lp_lower_sq(), w.dynamic_sq);
  EXPECT_GE(w.lp_upper_sq(), w.dynamic_sq);
}

TEST(Estimate, IdenticalMeasuresAreZero) {
  const FlowCheckContext ctx = FlowCheckContext::make(circle(32), EntropyModel::log());
  const DensityField rho = make_density(ctx.g(), "bump:0.4");
  const W2Estimate w = estimate_w2_sq(ctx, rho, rho);
  EXPECT_EQ(w.dynamic_sq, 0.0);
  EXPECT_TRUE(w.has_lp);
  EXPECT_EQ(w.lp_sq, 0.0);
}

TEST(Evi, IntegralFormHoldsOnCircle) {
  const FlowCheckContext ctx = FlowCheckContext::make(circle(64), EntropyModel::log());
  const DensityField mu0 = make_density(ctx.g(), "bump:0.2");
  const DensityField nu = make_density(ctx.g(), "bump:0.6");
  const CheckReport r = check_evi_integral(ctx, mu0, nu, 0.0, 0.01);
  EXPECT_TRUE(r.pass) << r.slack << " tol " << r.tolerance;
  EXPECT_EQ(r.name, "evi_integral");
  EXPECT_LE(r.measured.at("flow_max_mass_error"), 1e-12);
  EXPECT_TRUE(r.measured.count("w2sq_t1_nu_lp"));
}

TEST(Evi, IntegralFormWithTargetAtStart) {
  const FlowCheckContext ctx = FlowCheckContext::make(circle(64), EntropyModel::log());
  const DensityField mu0 = make_density(ctx.g(), "bump:0.2");
  const CheckReport r = check_evi_integral(ctx, mu0, mu0, 0.0, 0.002);
  EXPECT_TRUE(r.pass) << r.slack << " tol " << r.tolerance;
  EXPECT_EQ(r.measured.at("w2sq_t0_nu"), 0.0);
}

TEST(Evi, IntegralFormForPorousMediumOnTorus) {
  const auto g = std::make_shared<const ManifoldGrid>(build_grid(ManifoldSpec::torus(16, 16)));
  const FlowCheckContext ctx = FlowCheckContext::make(g, EntropyModel::power(2.0));
  const CheckReport r =
      check_evi_integral(ctx, make_density(*g, "random:3"), make_density(*g, "two-bump:0.5,0.8"), 0.0, 0.005);
  EXPECT_TRUE(r.pass) << r.slack << " tol " << r.tolerance;
}

TEST(Evi, SlackIsSuperadditiveAtZeroCurvature) {
  // At lambda = 0 the slack over [0, t2] exceeds the sum over [0, t1] and
  // [t1, t2] by t1 (E(mu_t1) - E(mu_t2)) >= 0.
  const FlowCheckContext ctx = FlowCheckContext::make(circle(64), EntropyModel::log());
  const DensityField mu0 = make_density(ctx.g(), "bump:0.2");
  const DensityField nu = make_density(ctx.g(), "bump:0.7");
  const double s01 = check_evi_integral(ctx, mu0, nu, 0.0, 0.004).slack;
  const double s12 = check_evi_integral(ctx, mu0, nu, 0.004, 0.01).slack;
  const CheckReport r02 = check_evi_integral(ctx, mu0, nu, 0.0, 0.01);
  EXPECT_GE(r02.slack, s01 + s12 - r02.tolerance);
}

TEST(Evi, DifferentialFormHoldsOnCircle) {
  const FlowCheckContext ctx = FlowCheckContext::make(circle(64), EntropyModel::log());
  const DensityField mu0 = make_density(ctx.g(), "bump:0.2");
  const DensityField nu = make_density(ctx.g(), "bump:0.6");
  const CheckReport r = check_evi_differential(ctx, mu0, nu, 0.005);
  EXPECT_TRUE(r.pass) << r.slack << " tol " << r.tolerance;
  EXPECT_TRUE(r.measured.count("dini_lp"));
}

TEST(Evi, DifferentialProxyBiasWithTargetOnTheFlow) {
  // With nu = mu_t both sides vanish in the continuum, but the forward quotient
  // of h -> 1/2 W2^2(mu_t, mu_{t+h}) is h/2 times the squared metric speed,
  // which for the heat flow is the Fisher information. The larger step sets
  // the proxy value, well above the tolerance scaled by the terms themselves.
  const FlowCheckContext ctx = FlowCheckContext::make(circle(64), EntropyModel::log());
  const DensityField mu0 = make_density(ctx.g(), "bump:0.2");
  const DensityField mu_t = flow(ctx, mu0, 0.005);
  const CheckReport r = check_evi_differential(ctx, mu0, mu_t, 0.005);
  EXPECT_EQ(r.measured.at("rhs"), 0.0);
  const double predicted = 0.5 * r.measured.at("step_large") * fisher_information(ctx.g(), mu_t);
  EXPECT_NEAR(r.measured.at("lhs"), predicted, 2e-2 * predicted);
  EXPECT_FALSE(r.pass);
}

TEST(Evi, RejectsBadTimes) {
  const FlowCheckContext ctx = FlowCheckContext::make(circle(16), EntropyModel::log());
  const DensityField rho = make_density(ctx.g(), "uniform");
  EXPECT_THROW(check_evi_integral(ctx, rho, rho, 0.2, 0.1), InvalidArgument);
  EXPECT_THROW(check_evi_integral(ctx, rho, rho, -1.0, 0.1), InvalidArgument);
  EXPECT_THROW(check_contraction(ctx, rho, rho, -0.1), InvalidArgument);
  EXPECT_THROW(check_regularization(ctx, rho, rho, 0.0), InvalidArgument);
}

TEST(Contraction, TranslatedBumpsOnCircle) {
  const FlowCheckContext ctx = FlowCheckContext::make(circle(64), EntropyModel::log());
  const DensityField mu = make_density(ctx.g(), "bump:0.2");
  const DensityField nu = shift_nodes(ctx.g(), mu, 0, 16);
  const CheckReport r = check_contraction(ctx, mu, nu, 0.01);
  EXPECT_TRUE(r.pass) << r.slack << " tol " << r.tolerance;
  // The quarter turn is a feasible plan, so it bounds the distance.
  EXPECT_LE(r.measured.at("w2sq_0_lp"), 0.0625 + 1e-12);
  EXPECT_LE(r.measured.at("ratio"), 1.0);
}

TEST(Contraction, DistanceShrinksForDifferentShapes) {
  const FlowCheckContext ctx = FlowCheckContext::make(circle(64), EntropyModel::log());
  const CheckReport r =
      check_contraction(ctx, make_density(ctx.g(), "bump:0.2"), make_density(ctx.g(), "two-bump:0.4,0.8"), 0.01);
  EXPECT_TRUE(r.pass) << r.slack << " tol " << r.tolerance;
  EXPECT_LT(r.measured.at("ratio"), 1.0);
}

TEST(Regularization, HoldsOnCircle) {
  const FlowCheckContext ctx = FlowCheckContext::make(circle(64), EntropyModel::log());
  const CheckReport r =
      check_regularization(ctx, make_density(ctx.g(), "bump:0.2"), make_density(ctx.g(), "uniform"), 0.01);
  EXPECT_TRUE(r.pass) << r.slack << " tol " << r.tolerance;
}

TEST(Regularization, PorousMediumOnCircle) {
  const FlowCheckContext ctx = FlowCheckContext::make(circle(64), EntropyModel::power(2.0));
  const CheckReport r =
      check_regularization(ctx, make_density(ctx.g(), "bump:0.2"), make_density(ctx.g(), "random:4"), 0.005);
  EXPECT_TRUE(r.pass) << r.slack << " tol " << r.tolerance;
}

TEST(UniformContinuity, HoldsOnCircle) {
  const FlowCheckContext ctx = FlowCheckContext::make(circle(64), EntropyModel::log());
  const CheckReport r = check_uniform_continuity(ctx, make_density(ctx.g(), "bump:0.2"), 0.0, 0.005);
  EXPECT_TRUE(r.pass) << r.slack << " tol " << r.tolerance;
  EXPECT_GT(r.measured.at("lhs"), 0.0);
  // Zero duration: both sides vanish.
  const CheckReport zero = check_uniform_continuity(ctx, make_density(ctx.g(), "bump:0.2"), 0.003, 0.003);
  EXPECT_TRUE(zero.pass);
  EXPECT_EQ(zero.measured.at("lhs"), 0.0);
}

TEST(DisplacementConvexity, HoldsForLogAndPowerOnCircle) {
  for (const EntropyModel& model : {EntropyModel::log(), EntropyModel::power(2.0)}) {
    const FlowCheckContext ctx = FlowCheckContext::make(circle(64), model);
    const CheckReport r = check_displacement_convexity(ctx, make_density(ctx.g(), "bump:0.2"),
                                                       make_density(ctx.g(), "bump:0.5"), {0.25, 0.5, 0.75});
    EXPECT_TRUE(r.pass) << model.str() << " " << r.slack << " tol " << r.tolerance;
    EXPECT_TRUE(r.measured.count("worst_s"));
  }
}

TEST(DisplacementConvexity, RejectsBadSamples) {
  const FlowCheckContext ctx = FlowCheckContext::make(circle(16), EntropyModel::log());
  const DensityField rho = make_density(ctx.g(), "uniform");
  EXPECT_THROW(check_displacement_convexity(ctx, rho, rho, {}), InvalidArgument);
  EXPECT_THROW(check_displacement_convexity(ctx, rho, rho, {1.5}), InvalidArgument);
}

TEST(ActionIdentity, UniformPathHasZeroTerms) {
  const FlowCheckContext ctx = FlowCheckContext::make(circle(32), EntropyModel::log());
  const DensityField uniform = make_density(ctx.g(), "uniform");
  TransportPath path;
  for (int k = 0; k <= 4; ++k) {
    path.s_nodes.push_back(k / 4.0);
    path.rho.push_back(uniform);
    path.phi.push_back(ScalarField::Zero(ctx.g().size()));
  }
  const ActionTerms a = action_terms(ctx, path, 0.1, 0.5);
  EXPECT_LE(std::abs(a.d_dt_half_action), 1e-12);
  EXPECT_LE(std::abs(a.d_ds_entropy), 1e-12);
  EXPECT_LE(std::abs(a.dissipation()), 1e-12);
  EXPECT_TRUE(action_identity(ctx, path, 0.1, 0.5).pass);
}

TEST(ActionIdentity, HoldsAlongTranslationForHeatFlow) {
  const FlowCheckContext ctx = FlowCheckContext::make(circle(128), EntropyModel::log());
  const TransportPath path = translation_path(ctx.g(), 16, 0.25);
  const CheckReport r = action_identity(ctx, path, 0.02, 0.5);
  EXPECT_TRUE(r.pass) << r.slack << " tol " << r.tolerance;
  // The pressure term vanishes identically for the log entropy.
  EXPECT_LE(std::abs(r.measured.at("dissipation_pressure")), 1e-12);
  EXPECT_LE(r.measured.at("dissipation"), 0.0);
}

TEST(ActionIdentity, ResidualShrinksUnderRefinement) {
  // Halving both the grid spacing and the s spacing.
  double residual[2];
  for (int level = 0; level < 2; ++level) {
    const FlowCheckContext ctx = FlowCheckContext::make(circle(64 << level), EntropyModel::log());
    const TransportPath path = translation_path(ctx.g(), 8 << level, 0.25);
    residual[level] = std::abs(action_identity(ctx, path, 0.02, 0.5).slack);
  }
  EXPECT_GE(residual[0] / residual[1], 1.5) << residual[0] << " " << residual[1];
}

TEST(ActionIdentity, HoldsForPorousMediumFlow) {
  // Backward Euler and the centred s differences are both first resolved at
  // this refinement: the residual is 0.061 at K = 16 with 64 steps.
  FlowCheckContext ctx = FlowCheckContext::make(circle(64), EntropyModel::power(2.0));
  ctx.min_steps = 2048;
  const TransportPath path = translation_path(ctx.g(), 128, 0.25);
  const CheckReport r = action_identity(ctx, path, 0.01, 0.5);
  EXPECT_TRUE(r.pass) << r.slack << " tol " << r.tolerance;
  EXPECT_LT(r.measured.at("dissipation_pressure"), 0.0);
}

TEST(ActionIdentity, RejectsEndpointsAndBadTimes) {
  const FlowCheckContext ctx = FlowCheckContext::make(circle(32), EntropyModel::log());
  const TransportPath path = translation_path(ctx.g(), 4, 0.25);
  EXPECT_THROW(action_terms(ctx, path, 0.1, 0.0), InvalidArgument);
  EXPECT_THROW(action_terms(ctx, path, 0.1, 0.3), InvalidArgument);
  EXPECT_THROW(action_terms(ctx, path, 0.0, 0.5), InvalidArgument);
}

TEST(LambdaAction, HoldsForHeatFlowAndRejectsPowerModels) {
  const FlowCheckContext ctx = FlowCheckContext::make(circle(64), EntropyModel::log());
  const TransportPath path = translation_path(ctx.g(), 16, 0.25);
  const CheckReport r = check_lambda_action_inequality(ctx, path, 0.02, 0.5);
  EXPECT_TRUE(r.pass) << r.slack << " tol " << r.tolerance;
  const FlowCheckContext porous = FlowCheckContext::make(circle(64), EntropyModel::power(2.0));
  EXPECT_THROW(check_lambda_action_inequality(porous, path, 0.02, 0.5), InvalidArgument);
}

}  // namespace
}  // namespace otflow
