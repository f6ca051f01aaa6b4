#pragma once

// Heat invariants of the quaternionic Heisenberg model: c0(n), the universal
// constant C_n and c1 = C_n kappa.

#include <cmath>
#include <numbers>
#include <string>

#include "json.hpp"
#include "qcheat/error.hpp"
#include "qcheat/kernel.hpp"
#include "qcheat/quadrature.hpp"
#include "qcheat/special.hpp"
#include "qcheat/version.hpp"

namespace qcheat {

namespace detail {

// int_0^inf y^p (y / sinh y)^{q} g(y) dy for |g| <= gmax, with the tail
// beyond R bounded through (y/sinh y)^q <= (2y)^q e^{-q y} / (1 - e^{-2R})^q.
template <typename G>
Estimate sinh_weighted_integral(unsigned p, unsigned q, G&& g, double gmax, double abs_tol, double rel_tol,
                                const QuadratureConfig& cfg) {
  double R = std::max(cfg.radial_truncation, 4.0), tail = 0.0;
  for (;; R += 1.0) {
    tail = gmax * std::pow(2.0, q) / std::pow(-std::expm1(-2.0 * R), q) * special::exp_poly_tail(p + q, q, R);
    if (tail <= abs_tol / 10.0) break;
  }
  auto f = [&](double y) {
    return std::pow(y, static_cast<double>(p)) * special::y_over_sinh_pow(y, q) * g(y);
  };
  QuadResult res = integrate_gk21(f, 0.0, R, abs_tol, rel_tol, cfg.max_evals, cfg.parallel_chunks);
  Estimate est{res.value, res.error + tail};
  if (!res.converged) throw NumericFailure("radial quadrature did not reach tolerance", est.value, est.error);
  return est;
}

inline void check_level(unsigned n) {
  if (n == 0) throw InputError("quaternionic level n must be at least 1");
}

}  // namespace detail

/// c0 = (16n)^{3/2} / (4 pi)^{2n+3} int_{R^3} (|tau| / sinh |tau|)^{2n} d tau.
inline Estimate compute_c0(unsigned n, const QuadratureConfig& cfg = {}) {
  detail::check_level(n);
  cfg.validate();
  const double pref = std::pow(16.0 * n, 1.5) * 4.0 * std::numbers::pi / std::pow(4.0 * std::numbers::pi, 2.0 * n + 3.0);
  Estimate e = detail::sinh_weighted_integral(
      2, 2 * n, [](double) { return 1.0; }, 1.0, cfg.abs_tol / pref, cfg.rel_tol, cfg);
  return {pref * e.value, pref * e.error};
}

/// int_0^inf y^{2n+2} / sinh^{2n} y ((2n+1)^2 - 2n(2n+1)(sinh y - y cosh y)/(y^2 sinh y)) dy
inline Estimate sphere_c1_integral(unsigned n, const QuadratureConfig& cfg = {}) {
  detail::check_level(n);
  cfg.validate();
  const double a = (2.0 * n + 1.0) * (2.0 * n + 1.0), b = 2.0 * n * (2.0 * n + 1.0);
  // the ratio lies in [-1/3, 0)
  return detail::sinh_weighted_integral(
      2, 2 * n, [&](double y) { return a - b * special::sinh_cosh_ratio(y); }, a + b / 3.0, cfg.abs_tol,
      cfg.rel_tol, cfg);
}

/// c1 of the standard sphere S^{4n+3}, whose qc scalar curvature is 16n(n+2).
inline Estimate sphere_c1(unsigned n, const QuadratureConfig& cfg = {}) {
  Estimate i = sphere_c1_integral(n, cfg);
  const double pref = 1.0 / std::pow(4.0 * std::numbers::pi, 2.0 * n + 2.0);
  return {pref * i.value, pref * i.error};
}

inline double sphere_curvature(unsigned n) { return 16.0 * n * (n + 2.0); }

/// C_n = sphere c1 / (16 n (n+2)).
inline Estimate compute_Cn(unsigned n, const QuadratureConfig& cfg = {}) {
  Estimate s = sphere_c1(n, cfg);
  const double k = sphere_curvature(n);
  return {s.value / k, s.error / k};
}

struct InvariantReport {
  unsigned n = 0;
  unsigned Q = 0;
  Estimate c0;
  Estimate Cn;
  double kappa = 0.0;
  Estimate c1;
  nlohmann::json provenance;
};

inline void to_json(nlohmann::json& j, const Estimate& e) { j = {{"value", e.value}, {"error", e.error}}; }

inline void to_json(nlohmann::json& j, const InvariantReport& r) {
  j = {{"n", r.n}, {"Q", r.Q}, {"c0", r.c0}, {"Cn", r.Cn}, {"kappa", r.kappa}, {"c1", r.c1},
       {"provenance", r.provenance}};
}

/// p(t, q, q) = t^{-(2n+3)} (c0 + C_n kappa t + o(t)).
inline InvariantReport asymptotic_report(unsigned n, double kappa, const QuadratureConfig& cfg = {},
                                         bool cross_check = true) {
  detail::check_level(n);
  if (!std::isfinite(kappa)) throw InputError("kappa must be finite");
  InvariantReport r;
  r.n = n;
  r.Q = 4 * n + 6;
  r.c0 = compute_c0(n, cfg);
  r.Cn = compute_Cn(n, cfg);
  r.kappa = kappa;
  r.c1 = {r.Cn.value * kappa, r.Cn.error * std::abs(kappa)};
  r.provenance = {{"version", kVersion}, {"quadrature", cfg}, {"c0_route", "radial quadrature of (|tau|/sinh|tau|)^{2n}"},
                  {"Cn_route", "sphere c1 integral / 16n(n+2)"}};
  if (kappa == 0.0) r.provenance["flat_model"] = "kappa = 0: diagonal is exactly c0 t^{-(2n+3)}";
  if (cross_check) {
    Estimate pk = HeatKernel(make_quaternionic_spec(n), cfg).diagonal(1.0);
    r.provenance["kernel_diagonal"] = pk;
    r.provenance["kernel_agrees"] = std::abs(pk.value - r.c0.value) <= pk.error + r.c0.error;
  }
  return r;
}

}  // namespace qcheat
