#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "qcheat/kernel.hpp"
#include "qcheat/marginals.hpp"

using namespace qcheat;

namespace {

GroupPoint<double> sample_point() { return {{0.3, -0.2, 0.5, 0.1}, {0.2, -0.4, 0.15}}; }

MultiIndex unit(std::size_t k, unsigned e = 1, std::size_t N = 7) {
  MultiIndex d(N, 0);
  d[k] = e;
  return d;
}

bool within(const Estimate& a, const Estimate& b, double slack = 0.0) {
  return std::abs(a.value - b.value) <= a.error + b.error + slack;
}

}  // namespace

TEST(Kernel, DiagonalMatchesZetaSeries) {
  for (unsigned n = 1; n <= 3; ++n) {
    Estimate p = HeatKernel(make_quaternionic_spec(n)).diagonal(1.0);
    EXPECT_NEAR(p.value, oracle::c0(n), p.error + 1e-14 * oracle::c0(n)) << n;
  }
}

TEST(Kernel, ParabolicHomogeneity) {
  HeatKernel k(make_quaternionic_spec(1));
  const auto h = sample_point();
  const Estimate p1 = k.at(1.0, h);
  for (double t : {0.25, 0.5, 2.0, 4.0}) {
    Estimate p = k.at(t, dilate(k.spec(), std::sqrt(t), h));
    const double s = std::pow(t, 5.0);
    EXPECT_TRUE(within({p.value * s, p.error * s}, p1)) << t;
  }
}

TEST(Kernel, SymmetryAndLeftInvariance) {
  auto spec = make_quaternionic_spec(1);
  HeatKernel k(spec);
  const auto h = sample_point();
  const GroupPoint<double> g{{1.0, 0.4, -0.7, 0.2}, {0.3, 0.0, -0.5}};
  const Estimate p = k.at(0.7, h);
  EXPECT_TRUE(within(p, k.at(0.7, group_inverse(spec, h))));
  EXPECT_TRUE(within(p, k(KernelQuery{0.7, g, group_mul(spec, g, h), {}})));
}

TEST(Kernel, DerivativesMatchFiniteDifferences) {
  HeatKernel k(make_quaternionic_spec(1));
  const auto h = sample_point();
  const double eps = 1e-4;
  for (std::size_t c = 0; c < 7; ++c) {
    auto hp = h, hm = h;
    (c < 4 ? hp.x[c] : hp.z[c - 4]) += eps;
    (c < 4 ? hm.x[c] : hm.z[c - 4]) -= eps;
    const double fd = (k.at(1.0, hp).value - k.at(1.0, hm).value) / (2 * eps);
    const double d = k.at(1.0, h, unit(c)).value;
    EXPECT_NEAR(d, fd, 1e-7 * (1 + std::abs(d))) << c;
  }
  auto hp = h, hm = h;
  hp.z[0] += eps;
  hm.z[0] -= eps;
  const double fd2 =
      (k.at(1.0, hp).value - 2 * k.at(1.0, h).value + k.at(1.0, hm).value) / (eps * eps);
  EXPECT_NEAR(k.at(1.0, h, unit(4, 2)).value, fd2, 1e-5);
}

TEST(Kernel, SolvesTheHeatEquation) {
  // d/dt p = sum_a X_a^2 p,  X_a = d/dx_a + 2 sum_{b,i} J^i_{ba} x_b d/dz_i
  auto spec = make_quaternionic_spec(1);
  HeatKernel k(spec);
  const auto h = sample_point();
  const double t = 0.8, dt = 1e-4;
  const double lhs = (k.at(t + dt, h).value - k.at(t - dt, h).value) / (2 * dt);
  double rhs = 0.0;
  for (std::size_t a = 0; a < 4; ++a) {
    std::vector<double> c(3, 0.0);  // coefficient of d/dz_i in X_a
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t b = 0; b < 4; ++b) c[i] += 2 * spec.structure_double(i)(b, a) * h.x[b];
    rhs += k.at(t, h, unit(a, 2)).value;
    for (std::size_t i = 0; i < 3; ++i) {
      MultiIndex d = unit(a);
      d[4 + i] = 1;
      rhs += 2 * c[i] * k.at(t, h, d).value;
      for (std::size_t j = 0; j < 3; ++j) {
        MultiIndex dd(7, 0);
        ++dd[4 + i];
        ++dd[4 + j];
        rhs += c[i] * c[j] * k.at(t, h, dd).value;
      }
    }
  }
  EXPECT_NEAR(lhs, rhs, 1e-7 * std::abs(rhs) + 1e-9);
}

TEST(Kernel, RejectsBadQueries) {
  auto spec = make_quaternionic_spec(1);
  HeatKernel k(spec);
  EXPECT_THROW(k.at(0.0, sample_point()), InputError);
  EXPECT_THROW(k.at(-1.0, sample_point()), InputError);
  EXPECT_THROW(k.at(1.0, sample_point(), unit(4, 3)), InputError);
  EXPECT_THROW(k.at(1.0, sample_point(), MultiIndex{1, 0}), InputError);
  EXPECT_THROW(k.at(1.0, GroupPoint<double>{{0, 0}, {0}}), InputError);
  Matrix<Rational> j(3, 3);
  j(0, 1) = 1;
  j(1, 0) = -1;
  EXPECT_THROW(HeatKernel(GroupSpec(3, {j})), InputError);
  QuadratureConfig bad;
  bad.rel_tol = 0;
  EXPECT_THROW(HeatKernel(spec, bad), InputError);
}

TEST(Marginals, MassAndSecondMoments) {
  for (unsigned n = 1; n <= 2; ++n) {
    auto spec = make_quaternionic_spec(n);
    const double m = 4.0 * n;
    for (double t : {1.0, 0.5}) {
      MomentTable mt = kernel_marginal_moments(spec, t);
      EXPECT_NEAR(mt.mass.value, 1.0, 1e-8);
      EXPECT_LE(mt.mass.error, 1e-6);
      EXPECT_NEAR(mt.second_x.value, kBrownianClock * t, 1e-7 * t);
      // Levy area: E[z_i^2] = 4 int_0^t E|J^i x|^2 kBrownianClock ds = 8 m t^2
      EXPECT_NEAR(mt.second_z.value, 8.0 * m * t * t, 1e-6 * m * t * t) << n << " " << t;
    }
  }
}

TEST(Marginals, HeisenbergMass) {
  EXPECT_NEAR(kernel_total_mass(make_heisenberg_spec(), 1.0).value, 1.0, 1e-8);
}
