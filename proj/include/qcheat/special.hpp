#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace qcheat::special {

/// log(sinh y) for y > 0 without overflow.
inline double log_sinh(double y) {
  if (y < 20.0) return std::log(std::sinh(y));
  return y + std::log1p(-std::exp(-2.0 * y)) - std::numbers::ln2;
}

/// y coth y, with the removable singularity at 0.
inline double y_coth(double y) {
  y = std::abs(y);
  if (y < 1e-4) return 1.0 + y * y / 3.0 - y * y * y * y / 45.0;
  return y / std::tanh(y);
}

/// (y / sinh y)^p for y >= 0.
inline double y_over_sinh_pow(double y, double p) {
  y = std::abs(y);
  if (y < 1e-4) {
    double y2 = y * y;
    return std::pow(1.0 - y2 / 6.0 + 7.0 * y2 * y2 / 360.0, p);
  }
  return std::exp(p * (std::log(y) - log_sinh(y)));
}

/// (sinh y - y cosh y) / (y^2 sinh y), even in y, tends to -1/3 at 0.
/// Below 0.1 the Taylor series is used (the closed form cancels badly).
inline double sinh_cosh_ratio(double y) {
  y = std::abs(y);
  if (y < 0.1) {
    double y2 = y * y;
    return -1.0 / 3.0 + y2 * (1.0 / 45.0 + y2 * (-2.0 / 945.0 + y2 * (1.0 / 4725.0 - y2 * 2.0 / 93555.0)));
  }
  return (1.0 - y_coth(y)) / (y * y);
}

/// Normalized Bessel function Lambda_nu(u) = Gamma(nu+1) (2/u)^nu J_nu(u),
/// so that Lambda_nu(0) = 1 and |Lambda_nu| <= 1 for nu >= -1/2.
/// Lambda_{-1/2} = cos, Lambda_{1/2}(u) = sin(u)/u.
inline double bessel_lambda(double nu, double u) {
  if (nu < -0.5) throw std::domain_error("bessel_lambda: order below -1/2");
  u = std::abs(u);
  if (u < 4.0 + std::max(nu, 0.0)) {
    // sum_k (-u^2/4)^k / (k! (nu+1)_k)
    double term = 1.0, sum = 1.0, w = -u * u / 4.0;
    for (int k = 1; k < 80; ++k) {
      term *= w / (k * (nu + k));
      sum += term;
      if (std::abs(term) < 1e-17 * std::abs(sum)) break;
    }
    return sum;
  }
  if (nu == -0.5) return std::cos(u);
  double twice = 2.0 * nu;
  if (twice == std::floor(twice) && static_cast<long>(twice) % 2 != 0) {
    // nu = l + 1/2: Lambda = (2l+1)!! j_l(u) / u^l, j_l by upward recurrence (u > l here)
    unsigned l = static_cast<unsigned>(nu - 0.5);
    double sn = std::sin(u), cs = std::cos(u);
    double jm = sn / u, j = sn / (u * u) - cs / u;
    if (l == 0) return jm;
    double dfact = 3.0, upow = u;
    for (unsigned k = 1; k < l; ++k) {
      double next = (2.0 * k + 1.0) / u * j - jm;
      jm = j;
      j = next;
      dfact *= 2.0 * k + 3.0;
      upow *= u;
    }
    return dfact * j / upow;
  }
  return std::tgamma(nu + 1.0) * std::pow(2.0 / u, nu) * std::cyl_bessel_j(nu, u);
}

/// Surface area of the unit sphere in R^d (d >= 1; |S^0| = 2).
inline double sphere_area(unsigned d) {
  return 2.0 * std::pow(std::numbers::pi, d / 2.0) / std::tgamma(d / 2.0);
}

/// Gamma(p+1, x) / c^{p+1}-style tail: integral_R^inf rho^p e^{-c rho} d rho, integer p.
inline double exp_poly_tail(unsigned p, double c, double r) {
  // e^{-cR} sum_{j=0}^p p!/j! R^j / c^{p+1-j}
  double sum = 0.0, coef = 1.0;  // p!/j! built from j = p downwards
  for (int j = static_cast<int>(p); j >= 0; --j) {
    sum += coef * std::pow(r, j) / std::pow(c, static_cast<double>(p) + 1.0 - j);
    coef *= j;
  }
  return std::exp(-c * r) * sum;
}

}  // namespace qcheat::special
