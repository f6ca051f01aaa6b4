#pragma once

// Integrals of the heat kernel against the Haar measure: total mass and
// second moments. The x-integral is Gaussian and done in closed form; what
// remains is a radial z-marginal (itself a radial Fourier integral) that is
// integrated by nested quadrature with explicit tail bounds.

#include <boost/math/special_functions/beta.hpp>

#include <cmath>
#include <cstddef>
#include <numbers>
#include <vector>

#include "qcheat/kernel.hpp"

namespace qcheat {

struct MomentTable {
  double t = 0.0;
  // First moments vanish by parity (x -> -x, z -> -z); stored for completeness.
  Estimate mean_x;
  Estimate mean_z;
  Estimate second_x;  // E[x_a x_a], any a; E[x_a x_b] = 0 for a != b
  Estimate second_z;  // E[z_i z_i], any i; E[z_i z_j] = 0 for i != j
  Estimate mass;
};

namespace detail {

class ZMarginal {
 public:
  ZMarginal(const GroupSpec& spec, double t, const QuadratureConfig& cfg) : cfg_(cfg), t_(t) {
    if (!spec.is_h_type()) throw InputError("marginals need an H-type spec");
    if (!(t > 0)) throw InputError("time must be positive");
    m_ = spec.horizontal_dim();
    r_ = spec.vertical_dim();
    nu_ = r_ / 2.0 - 1.0;
    // P(|U_1| > u) for U uniform on S^{r-1}; U_1^2 ~ Beta(1/2, (r-1)/2).
    for (int k = 1; k < 20; ++k) {
      double u = 0.05 * k;
      proj_.push_back(r_ == 1 ? 1.0 : boost::math::ibetac(0.5, (r_ - 1) / 2.0, u * u));
    }
  }

  /// Lebesgue density of z, radial, times the x-weight: x_weight = false gives
  /// the marginal, true gives int x_a^2 p dx (any fixed a).
  Estimate density(double s, bool x_weight) const {
    const double kprime = std::pow(2.0, -static_cast<double>(r_)) * special::sphere_area(r_) /
                          std::pow(4.0 * std::numbers::pi * t_, static_cast<double>(r_));
    const double half_m = m_ / 2.0;
    const double xmax = x_weight ? 2.0 * t_ : 1.0;
    double R = 4.0, tail = 0.0;
    for (;; R += 1.0) {
      tail = xmax * std::pow(2.0, half_m) * special::exp_poly_tail(static_cast<unsigned>(r_ - 1), half_m, R);
      if (tail * kprime <= inner_abs_ / 10.0) break;
    }
    auto f = [&](double rho) {
      double lc = rho < 20.0 ? std::log(std::cosh(rho)) : rho + std::log1p(std::exp(-2.0 * rho)) - std::numbers::ln2;
      double v = std::pow(rho, static_cast<double>(r_) - 1.0) * std::exp(-half_m * lc) *
                 special::bessel_lambda(nu_, rho * s / (4.0 * t_));
      if (x_weight) v *= 2.0 * t_ / special::y_coth(rho);
      return v;
    };
    const int panels = std::max(cfg_.parallel_chunks, static_cast<int>(R * s / (4.0 * t_) / std::numbers::pi) + 1);
    QuadResult q = integrate_gk21(f, 0.0, R, inner_abs_ / kprime, 1e-13, cfg_.max_evals, panels);
    return {kprime * q.value, kprime * (q.error + tail)};
  }

  /// Upper bound for P(|z| > S).
  double tail_probability(double S) const {
    // P(|z| > S) <= P(|z_1| > u S) / P(|U_1| > u) with U uniform on the sphere,
    // and E exp(l z_1) = cos(4 t l)^{-m/2}; optimized over u and l on grids.
    double best = 1.0;
    for (std::size_t iu = 0; iu < proj_.size(); ++iu) {
      const double u = 0.05 * (iu + 1);
      for (int k = 1; k < 100; ++k) {
        double theta = (std::numbers::pi / 2.0) * k / 100.0;  // 4 t l
        double l = theta / (4.0 * t_);
        double b = 2.0 / proj_[iu] * std::exp(-l * u * S) * std::pow(std::cos(theta), -static_cast<double>(m_) / 2.0);
        best = std::min(best, b);
      }
    }
    return best;
  }

  /// Bound for E[|z|^p ; |z| > S] by unit shells.
  double tail_moment(double S, unsigned p) const {
    double sum = 0.0;
    for (int j = 0; j < 100000; ++j) {
      double term = std::pow(S + j + 1.0, static_cast<double>(p)) * tail_probability(S + j);
      sum += term;
      if (term < 1e-30 || (j > 10 && term < 1e-16 * sum)) break;
    }
    return sum;
  }

  /// |S^{r-1}| int_0^S s^{r-1+p} g(s) ds plus a tail bound.
  Estimate radial_moment(unsigned p, bool x_weight, double outer_tol) const {
    double S = 8.0 * t_;
    double tail = 0.0;
    for (;; S += 2.0 * t_) {
      tail = x_weight ? std::sqrt(12.0 * t_ * t_ * tail_probability(S)) : tail_moment(S, p);
      if (tail <= outer_tol / 10.0) break;
    }
    double inner_err = 0.0;
    auto g = [&](double s) {
      Estimate d = density(s, x_weight);
      double w = std::pow(s, static_cast<double>(r_ - 1 + p));
      inner_err = std::max(inner_err, std::abs(w) * d.error);
      return w * d.value;
    };
    QuadResult q = integrate_gk21(g, 0.0, S, outer_tol / special::sphere_area(r_) / 10.0, 1e-12, 200000,
                                  16);
    if (!q.converged)
      throw NumericFailure("marginal quadrature did not converge", special::sphere_area(r_) * q.value,
                           special::sphere_area(r_) * q.error);
    const double area = special::sphere_area(r_);
    return {area * q.value, area * (q.error + inner_err * S) + tail};
  }

  double inner_abs_ = 1e-15;

 private:
  QuadratureConfig cfg_;
  double t_;
  std::size_t m_ = 0, r_ = 0;
  double nu_ = 0.0;
  std::vector<double> proj_;
};

}  // namespace detail

/// int p(t, 0, h) d mu(h); equals 1 (stochastic completeness).
inline Estimate kernel_total_mass(const GroupSpec& spec, double t, const QuadratureConfig& cfg = {},
                                  double tol = 1e-9) {
  return detail::ZMarginal(spec, t, cfg).radial_moment(0, false, tol);
}

inline MomentTable kernel_marginal_moments(const GroupSpec& spec, double t, const QuadratureConfig& cfg = {},
                                           double tol = 1e-9) {
  detail::ZMarginal zm(spec, t, cfg);
  MomentTable mt;
  mt.t = t;
  mt.mass = zm.radial_moment(0, false, tol);
  mt.second_x = zm.radial_moment(0, true, tol);
  Estimate zz = zm.radial_moment(2, false, tol * t * t);
  const double r = static_cast<double>(spec.vertical_dim());
  mt.second_z = {zz.value / r, zz.error / r};
  return mt;
}

}  // namespace qcheat
