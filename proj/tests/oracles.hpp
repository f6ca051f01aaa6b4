#pragma once

// Reference values computed by routes that share no code with the library.

#include <boost/math/quadrature/exp_sinh.hpp>

#include <cmath>
#include <numbers>
#include <vector>

namespace oracle {

/// int_0^inf rho^{2n+2} / sinh^{2n} rho d rho through the binomial series of
/// sinh^{-2n} and zeta tails.
inline long double sinh_moment_series(unsigned n) {
  // C(k + 2n - 1, 2n - 1) = prod_{i=1}^{2n-1} (j - n + i) / (2n-1)!, j = n + k
  std::vector<long double> poly{1.0L};
  long double fact = 1.0L;
  for (unsigned i = 1; i < 2 * n; ++i) {
    const long double root = static_cast<long double>(i) - n;
    std::vector<long double> next(poly.size() + 1, 0.0L);
    for (std::size_t d = 0; d < poly.size(); ++d) {
      next[d + 1] += poly[d];
      next[d] += root * poly[d];
    }
    poly = std::move(next);
    fact *= i;
  }
  const unsigned p = 2 * n + 3;
  long double sum = 0.0L;
  for (std::size_t d = 0; d < poly.size(); ++d) {
    const long double s = static_cast<long double>(p - d);
    long double tail = std::riemann_zetal(s);
    for (unsigned j = 1; j < n; ++j) tail -= std::pow(static_cast<long double>(j), -s);
    sum += poly[d] * tail;
  }
  long double f22 = 1.0L;
  for (unsigned i = 2; i <= 2 * n + 2; ++i) f22 *= i;
  return std::ldexp(1.0L, 2 * static_cast<int>(n)) * f22 / fact * sum / std::ldexp(1.0L, static_cast<int>(p));
}

inline double c0(unsigned n) {
  const long double pi = std::numbers::pi_v<long double>;
  const long double pref = std::pow(16.0L * n, 1.5L) * 4.0L * pi / std::pow(4.0L * pi, 2.0L * n + 3.0L);
  return static_cast<double>(pref * sinh_moment_series(n));
}

/// (4 pi)^{-(2n+2)} int_0^inf y^{2n+2}/sinh^{2n} y ((2n+1)^2 - 2n(2n+1)(sinh y - y cosh y)/(y^2 sinh y)) dy
inline double sphere_c1(unsigned n) {
  const long double a = (2.0L * n + 1) * (2.0L * n + 1), b = 2.0L * n * (2.0L * n + 1);
  auto f = [&](long double y) -> long double {
    if (y > 5000.0L) return 0.0L;
    long double ratio;
    if (y < 1e-3L)
      ratio = -1.0L / 3 + y * y / 45;
    else
      ratio = (std::sinh(y) - y * std::cosh(y)) / (y * y * std::sinh(y));
    const long double w = y < 1e-3L ? 1.0L : y / std::sinh(y);
    return y * y * std::pow(w, 2.0L * n) * (a - b * ratio);
  };
  boost::math::quadrature::exp_sinh<long double> integrator;
  const long double v = integrator.integrate(f, 1e-15L);
  const long double pi = std::numbers::pi_v<long double>;
  return static_cast<double>(v / std::pow(4.0L * pi, 2.0L * n + 2.0L));
}

}  // namespace oracle
