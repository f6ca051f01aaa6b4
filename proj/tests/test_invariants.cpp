#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "oracles.hpp"
#include "qcheat/invariants.hpp"

using namespace qcheat;

TEST(Invariants, C0LevelOneIsOneOver120) {
  Estimate c = compute_c0(1);
  EXPECT_NEAR(c.value, 1.0 / 120.0, 1e-12);
  EXPECT_LE(c.error, 1e-12);
  // int rho^4 / sinh^2 rho = pi^4 / 30
  EXPECT_NEAR(static_cast<double>(oracle::sinh_moment_series(1)), std::pow(std::numbers::pi, 4) / 30, 1e-14);
}

TEST(Invariants, C0AgreesWithSeriesOracle) {
  for (unsigned n = 1; n <= 4; ++n) {
    Estimate c = compute_c0(n);
    EXPECT_NEAR(c.value, oracle::c0(n), std::max(c.error, 1e-13 * oracle::c0(n))) << n;
  }
}

TEST(Invariants, ToleranceIsHonoured) {
  QuadratureConfig cfg;
  cfg.abs_tol = 1e-10;
  cfg.rel_tol = 1e-6;
  Estimate c = compute_c0(2, cfg);
  EXPECT_LE(c.error, 1e-10);
  EXPECT_NEAR(c.value, oracle::c0(2), 1e-10);
}

TEST(Invariants, SphereIntegralAgreesWithOracle) {
  for (unsigned n = 1; n <= 3; ++n) {
    const double c1 = sphere_c1(n).value;
    EXPECT_NEAR(c1 / oracle::sphere_c1(n), 1.0, 1e-10) << n;
    EXPECT_NEAR(compute_Cn(n).value * sphere_curvature(n), c1, 1e-15 * c1);
  }
}

TEST(Invariants, CnIsPositiveAndDecreasing) {
  double prev = INFINITY;
  for (unsigned n = 1; n <= 3; ++n) {
    double c = compute_Cn(n).value;
    EXPECT_GT(c, 0);
    EXPECT_LT(c, prev);
    prev = c;
  }
  EXPECT_NEAR(compute_Cn(1).value, 2.85368320166966866636e-5, 1e-15);
}

TEST(Invariants, ReportIsLinearInKappa) {
  auto r0 = asymptotic_report(1, 0.0, {}, false);
  auto r1 = asymptotic_report(1, 48.0, {}, true);
  EXPECT_EQ(r0.c1.value, 0.0);
  EXPECT_TRUE(r0.provenance.contains("flat_model"));
  EXPECT_EQ(r1.Q, 10u);
  EXPECT_NEAR(r1.c1.value, 48.0 * r1.Cn.value, 1e-18);
  EXPECT_TRUE(r1.provenance["kernel_agrees"].get<bool>());
  nlohmann::json j = r1;
  EXPECT_EQ(j["n"], 1);
  EXPECT_THROW(asymptotic_report(0, 1.0), InputError);
  EXPECT_THROW(asymptotic_report(1, NAN), InputError);
}
