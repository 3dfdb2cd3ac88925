#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "otflow/density.hpp"
#include "otflow/entropy.hpp"
#include "otflow/error.hpp"

namespace otflow {
namespace {

constexpr double kPi = std::numbers::pi;

TEST(EntropyModel, PressureIdentityAtSamples) {
  for (const EntropyModel& model :
       {EntropyModel::log(), EntropyModel::power(2.0), EntropyModel::power(0.4), EntropyModel::power(3.5)}) {
    for (double r : {0.1, 0.5, 1.0, 2.0, 10.0}) {
      const double identity = r * model.de(r) - (model.e(r) - model.e_at_zero());
      EXPECT_NEAR(model.u(r), identity, 1e-12 * std::max(1.0, std::abs(model.u(r)))) << model.str() << " r=" << r;
    }
  }
}

TEST(EntropyModel, ClosedForms) {
  EXPECT_DOUBLE_EQ(EntropyModel::log().u(2.0), 2.0);
  EXPECT_DOUBLE_EQ(EntropyModel::log().e(1.0), 0.0);
  const auto p2 = EntropyModel::power(2.0);
  EXPECT_DOUBLE_EQ(p2.e(3.0), 9.0);
  EXPECT_DOUBLE_EQ(p2.u(3.0), 9.0);
  EXPECT_DOUBLE_EQ(p2.du(3.0), 6.0);
  EXPECT_EQ(EntropyModel::log().pressure_excess(7.0), 0.0);
  EXPECT_DOUBLE_EQ(p2.pressure_excess(3.0), 9.0);
}

TEST(EntropyModel, RejectsInvalidExponent) {
  EXPECT_THROW(EntropyModel::power(1.0), InvalidArgument);
  EXPECT_THROW(EntropyModel::power(0.0), InvalidArgument);
  EXPECT_THROW(EntropyModel::power(-2.0), InvalidArgument);
  EXPECT_THROW(make_entropy(EntropyKind::power, 1.0), InvalidArgument);
}

TEST(EntropyModel, ParseAndMetadata) {
  EXPECT_EQ(EntropyModel::parse("log").kind(), EntropyKind::log);
  EXPECT_DOUBLE_EQ(EntropyModel::parse("power:m=2").exponent(), 2.0);
  EXPECT_DOUBLE_EQ(EntropyModel::parse("power:1.5").exponent(), 1.5);
  EXPECT_EQ(EntropyModel::parse(EntropyModel::power(0.75).str()).exponent(), 0.75);
  EXPECT_THROW(EntropyModel::parse("power:m=1"), InvalidArgument);
  EXPECT_THROW(EntropyModel::parse("power:m=x"), InvalidArgument);
  EXPECT_THROW(EntropyModel::parse("tsallis"), InvalidArgument);
  EXPECT_TRUE(EntropyModel::log().superlinear());
  EXPECT_TRUE(std::isinf(EntropyModel::log().e_prime_at_infinity()));
  EXPECT_FALSE(EntropyModel::power(0.5).superlinear());
  EXPECT_EQ(EntropyModel::power(0.5).e_prime_at_infinity(), 0.0);
}

TEST(McCann, LogPassesInAnyDimension) {
  for (int n : {1, 2, 3, 10}) EXPECT_TRUE(check_mccann(EntropyModel::log(), n).pass) << n;
}

TEST(McCann, PowerThreshold) {
  EXPECT_TRUE(check_mccann(EntropyModel::power(2.0), 2).pass);
  // Threshold m >= 1 - 1/n: m = 1/2 is admissible for n = 2, m = 0.4 is not.
  EXPECT_TRUE(check_mccann(EntropyModel::power(0.5), 2).pass);
  const CheckReport bad = check_mccann(EntropyModel::power(0.4), 2);
  EXPECT_FALSE(bad.pass);
  ASSERT_FALSE(bad.notes.empty());
  EXPECT_NE(bad.notes.front().find("r U'(r) - (1 - 1/n) U(r) >= 0"), std::string::npos);
  EXPECT_NEAR(bad.measured.at("worst_displacement_margin"), (0.4 - 0.5) / 1.4, 1e-12);
  EXPECT_FALSE(check_mccann(EntropyModel::power(0.6), 3).pass);
  EXPECT_TRUE(check_mccann(EntropyModel::power(0.7), 3).pass);
}

TEST(McCann, DimensionOneIsFlagged) {
  const CheckReport r = check_mccann(EntropyModel::power(2.0), 1);
  EXPECT_TRUE(r.pass);
  bool flagged = false;
  for (const auto& note : r.notes) flagged |= note.find("dimension 1") != std::string::npos;
  EXPECT_TRUE(flagged);
  EXPECT_THROW(check_mccann(EntropyModel::log(), 0), InvalidArgument);
}

TEST(Evaluate, UniformDensities) {
  const auto g = build_grid(ManifoldSpec::circle(64));
  const ScalarField one = ScalarField::Ones(g.size());
  EXPECT_NEAR(evaluate(EntropyModel::log(), g, one), 0.0, 1e-15);
  EXPECT_NEAR(evaluate(EntropyModel::power(2.0), g, one), 1.0, 1e-14);
}

TEST(Evaluate, MatchesHighResolutionQuadrature) {
  const auto g = build_grid(ManifoldSpec::circle(128));
  auto rho_fn = [](double x) { return 1.0 + 0.5 * std::cos(2.0 * kPi * x); };
  const ScalarField rho = sample(g, [&](const auto& p) { return rho_fn(p[0]); });
  double oracle = 0.0;
  const int fine = 4096;
  for (int i = 0; i < fine; ++i) {
    const double r = rho_fn(static_cast<double>(i) / fine);
    oracle += r * std::log(r) / fine;
  }
  EXPECT_NEAR(evaluate(EntropyModel::log(), g, rho), oracle, 1e-9);
}

TEST(Evaluate, RejectsNonpositiveDensity) {
  const auto g = build_grid(ManifoldSpec::circle(16));
  ScalarField rho = ScalarField::Ones(16);
  rho[5] = 0.0;
  EXPECT_THROW(evaluate(EntropyModel::log(), g, rho), InvalidArgument);
  rho[5] = -1.0;
  EXPECT_THROW(evaluate(EntropyModel::power(2.0), g, rho), InvalidArgument);
}

TEST(Evaluate, TranslationInvariantOnFlatGrids) {
  for (const char* text : {"circle:64", "torus:16x24"}) {
    const auto g = build_grid(ManifoldSpec::parse(text));
    const DensityField rho = make_density(g, "random:17");
    for (const EntropyModel& model : {EntropyModel::log(), EntropyModel::power(2.0)}) {
      const double base = evaluate(model, g, rho);
      EXPECT_NEAR(evaluate(model, g, shift_nodes(g, rho, 3, 5)), base, 1e-12) << text;
    }
  }
}

TEST(Evaluate, JensenLowerBound) {
  for (const char* text : {"circle:64", "torus:16x16", "sphere:16x32", "circle:32:2.5"}) {
    const auto g = build_grid(ManifoldSpec::parse(text));
    for (const EntropyModel& model : {EntropyModel::log(), EntropyModel::power(2.0), EntropyModel::power(0.7)}) {
      const double bound = entropy_infimum(model, g);
      EXPECT_NEAR(evaluate(model, g, make_density(g, "uniform")), bound, 1e-12 * std::max(1.0, std::abs(bound)));
      for (int seed = 0; seed < 4; ++seed)
        EXPECT_GE(evaluate(model, g, make_density(g, "random:" + std::to_string(seed))), bound - 1e-12) << text;
    }
  }
}

}  // namespace
}  // namespace otflow
