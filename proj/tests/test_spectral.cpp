#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "qcheat/spectral.hpp"

using namespace qcheat;

namespace {

std::vector<double> synthetic(const std::vector<double>& t, double Q, double A, double B) {
  std::vector<double> tr;
  for (double s : t) tr.push_back(std::pow(s, -Q / 2) * (A + B * s));
  return tr;
}

}  // namespace

TEST(Spectral, RecoversSyntheticTrace) {
  auto t = default_time_grid();
  ASSERT_EQ(t.size(), 16u);
  SpectralFit f = fit_heat_trace(t, synthetic(t, 10, 1.0 / 120, 0.01));
  EXPECT_NEAR(f.Q / 10, 1.0, 1e-10);
  EXPECT_NEAR(f.A * 120, 1.0, 1e-10);
  EXPECT_NEAR(f.B / 0.01, 1.0, 1e-8);
  EXPECT_LT(f.iterations, 200);
  EXPECT_LT(f.residual_rms, 1e-12);
}

TEST(Spectral, FitIsStableUnderSmallNoise) {
  auto t = default_time_grid();
  auto tr = synthetic(t, 14, 4.48e-5, 2e-4);
  for (std::size_t k = 0; k < tr.size(); ++k) tr[k] *= 1 + 1e-9 * ((k % 3) - 1.0);
  SpectralFit f = fit_heat_trace(t, tr);
  EXPECT_NEAR(f.Q, 14, 1e-4);
}

TEST(Spectral, FlatTorusSpectrum) {
  auto spec = load_spectrum(std::string(QCHEAT_FIXTURES) + "/torus_spectrum.txt");
  EXPECT_EQ(spec.metadata, "flat unit torus R^2/Z^2, |k|^2 <= 500");
  std::vector<double> grid;
  for (int k = 0; k < 10; ++k) grid.push_back(0.001 * std::pow(10.0, k / 9.0));
  SpectralFit f = spectral_extract(spec, grid);
  EXPECT_NEAR(f.Q, 2.0, 1e-6);
  EXPECT_NEAR(f.A, 1.0 / (4 * std::numbers::pi), 1e-7);
  EXPECT_NEAR(f.B, 0.0, 1e-6);
  EXPECT_GT(f.truncation, 0);
  EXPECT_THROW(spectral_extract(spec, {1e-4, 2e-4, 4e-4}), InputError);
}

TEST(Spectral, ParseErrorsCarryLineNumbers) {
  try {
    load_spectrum(std::string(QCHEAT_FIXTURES) + "/bad_spectrum.txt");
    FAIL();
  } catch (const InputError& e) {
    EXPECT_EQ(e.line(), 4);
  }
  auto expect_line = [](const std::string& text, int line) {
    std::istringstream in(text);
    try {
      parse_spectrum(in);
      ADD_FAILURE() << text;
    } catch (const InputError& e) {
      EXPECT_EQ(e.line(), line) << text;
    }
  };
  expect_line("1 2\n0.5 1\n", 2);
  expect_line("1 2 3\n", 1);
  expect_line("\n-1\n", 2);
  expect_line("1 0\n", 1);
  expect_line("1 x\n", 1);
  std::istringstream empty("# nothing\n");
  EXPECT_THROW(parse_spectrum(empty), InputError);
  EXPECT_THROW(load_spectrum("/nonexistent/spectrum"), InputError);
}

TEST(Spectral, TraceFixture) {
  auto s = load_trace(std::string(QCHEAT_FIXTURES) + "/synthetic_trace.txt");
  EXPECT_EQ(s.t.size(), 16u);
  SpectralFit f = fit_heat_trace(s.t, s.trace);
  EXPECT_NEAR(f.Q, 10, 1e-8);
  std::istringstream bad("0.1 2\n0.1 3\n");
  try {
    parse_trace(bad);
    FAIL();
  } catch (const InputError& e) {
    EXPECT_EQ(e.line(), 2);
  }
}

TEST(Spectral, DefaultMultiplicityAndRealWeights) {
  std::istringstream in("0\n1 2.5 # comment\n");
  auto s = parse_spectrum(in);
  ASSERT_EQ(s.eigenvalues.size(), 2u);
  EXPECT_EQ(s.eigenvalues[0].second, 1.0);
  EXPECT_EQ(s.eigenvalues[1].second, 2.5);
  EXPECT_NEAR(s.trace(1.0), 1 + 2.5 * std::exp(-1.0), 1e-15);
}

TEST(Spectral, RejectsDegenerateInput) {
  EXPECT_THROW(fit_heat_trace({0.1, 0.2}, {1, 2}), InputError);
  EXPECT_THROW(fit_heat_trace({0.1, 0.2, 0.3}, {1, -2, 3}), InputError);
  EXPECT_THROW(fit_heat_trace({0.1, 0.2, 0.3}, {1, 2}), InputError);
  SpectralFitOptions strict;
  strict.max_condition = 1.0;
  auto t = default_time_grid();
  EXPECT_THROW(fit_heat_trace(t, synthetic(t, 10, 1, 1), strict), NumericFailure);
}

TEST(Spectral, GeometryOfTheFlatModel) {
  auto t = default_time_grid();
  const double c0 = compute_c0(1).value, cn = compute_Cn(1).value;
  const double vol = 3.0, kappa = 48.0;
  SpectralFit f = fit_heat_trace(t, synthetic(t, 10, c0 * vol, cn * kappa * vol));
  SpectralGeometry g = spectral_geometry(f, 1);
  EXPECT_NEAR(g.dimension, 7.0, 1e-8);
  EXPECT_NEAR(g.volume, vol, 1e-8);
  EXPECT_NEAR(g.kappa, kappa, 1e-5);
}
