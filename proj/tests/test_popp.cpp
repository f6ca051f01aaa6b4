#include <gtest/gtest.h>

#include <Eigen/Dense>

#include <random>

#include "qcheat/popp.hpp"
#include "qcheat/qc_expansion.hpp"

using namespace qcheat;

TEST(Popp, QuaternionicMatrixIsExactlyScalar) {
  for (unsigned n = 1; n <= 4; ++n) {
    auto data = adapted_frame_from_group(make_quaternionic_spec(n));
    auto d = popp_density(data);
    EXPECT_EQ(d.B, Rational(16 * n) * Matrix<Rational>::identity(3));
    EXPECT_EQ(d.det, Rational(16 * n) * Rational(16 * n) * Rational(16 * n));
    EXPECT_NEAR(d.value, std::pow(16.0 * n, -1.5), 1e-16);
  }
  EXPECT_DOUBLE_EQ(popp_density(adapted_frame_from_group(make_quaternionic_spec(1))).value, 1.0 / 64.0);
}

TEST(Popp, HeisenbergToy) {
  AdaptedFrameData<Rational> d;
  d.m = 2;
  d.k = 1;
  Matrix<Rational> b(2, 2);
  b(0, 1) = 1;
  b(1, 0) = -1;
  d.b = {b};
  auto p = popp_density(d);
  EXPECT_EQ(p.B(0, 0), 2);
  EXPECT_NEAR(p.value, 1.0 / std::sqrt(2.0), 1e-16);
}

TEST(Popp, SingularMatrixNamesTheDirection) {
  AdaptedFrameData<Rational> d;
  d.m = 2;
  d.k = 2;
  Matrix<Rational> b(2, 2);
  b(0, 1) = 1;
  b(1, 0) = -1;
  d.b = {b, Rational(2) * b};
  try {
    popp_density(d);
    FAIL();
  } catch (const InvariantViolation& e) {
    EXPECT_NE(std::string(e.what()).find("(-2, 1)"), std::string::npos) << e.what();
  }
}

TEST(Popp, RejectsNonAntisymmetricBrackets) {
  auto d = adapted_frame_from_group(make_quaternionic_spec(1));
  d.b[1](0, 2) += 1;
  EXPECT_THROW(popp_density(d), InvariantViolation);
  auto e = adapted_frame_from_group(make_quaternionic_spec(1));
  e.b.pop_back();
  EXPECT_THROW(popp_density(e), InputError);
}

TEST(Popp, InvariantUnderVerticalRotations) {
  std::mt19937 gen(17);
  std::normal_distribution<double> N;
  for (unsigned n = 1; n <= 3; ++n) {
    auto exact = adapted_frame_from_group(make_quaternionic_spec(n));
    const double ref = popp_density(exact).value;
    for (int trial = 0; trial < 10; ++trial) {
      Eigen::Matrix3d g;
      for (int i = 0; i < 9; ++i) g(i / 3, i % 3) = N(gen);
      Eigen::Matrix3d O = Eigen::HouseholderQR<Eigen::Matrix3d>(g).householderQ();
      AdaptedFrameData<double> d;
      d.m = exact.m;
      d.k = 3;
      for (std::size_t i = 0; i < 3; ++i) {
        Matrix<double> bi(d.m, d.m);
        for (std::size_t j = 0; j < 3; ++j) bi = bi + O(i, j) * exact.b[j].cast<double>();
        d.b.push_back(bi);
      }
      EXPECT_NEAR(popp_density(d).value, ref, 1e-12 * ref);
    }
  }
}

TEST(Popp, GroupFrameIsDivergenceFree) {
  for (unsigned n = 1; n <= 2; ++n) {
    auto spec = make_quaternionic_spec(n);
    AdaptedFrameData<Rational> d = adapted_frame_from_group(spec);
    EXPECT_THROW(divergence_terms(d), InputError);
    d.c = group_structure_functions(spec);
    for (const auto& v : divergence_terms(d)) EXPECT_EQ(v, 0);
    // the bracket data is consistent with the structure functions
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t a = 0; a < d.m; ++a)
        for (std::size_t b = 0; b < d.m; ++b) EXPECT_EQ((*d.c)[d.m + i][a][b], Rational(-1) * d.b[i](a, b));
  }
}

TEST(Popp, NormalFrameDivergenceMatchesExpansion) {
  auto spec = make_quaternionic_spec(1);
  TensorSymbols ts(1);
  auto ce = build_coframe(spec, ts);
  auto ec = expansion_coefficients(spec, ts);
  RescaledFrame rf(spec, ce, ec);
  AdaptedFrameData<Rational, SymPoly> d;
  d.m = 4;
  d.k = 3;
  d.b = spec.bracket_constants();
  StructureFunctions<SymPoly> c(7, std::vector<std::vector<SymPoly>>(7, std::vector<SymPoly>(4, SymPoly(ce.space))));
  for (std::size_t a = 0; a < 7; ++a)
    for (std::size_t b = 0; b < 7; ++b)
      for (std::size_t al = 0; al < 4; ++al) c[a][b][al] = rf.structure_function(a, b, al, 2);
  d.c = std::move(c);
  auto div = divergence_terms(d);
  auto ref = divergence_coefficient(spec, ec);
  ASSERT_EQ(div.size(), ref.size());
  for (std::size_t a = 0; a < div.size(); ++a) EXPECT_EQ(div[a], ref[a]) << a;
}
