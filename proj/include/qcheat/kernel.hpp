#pragma once

// Heat kernel of sum_a X_a^2 on an H-type step-two group (the quaternionic
// Heisenberg group in particular), with respect to the nilpotentized Popp
// measure. The three- (in general r-) dimensional Fourier integral is reduced
// to a radial integral in rho = |2 tau|:
//
//   p(t, 0, (x, z)) = K(t) int_0^inf rho^{r-1} (rho / sinh rho)^{m/2}
//                       exp(-rho coth(rho) |x|^2 / (4t)) Lambda_nu(rho |z| / (4t)) d rho
//
// with nu = r/2 - 1 and K(t) = sqrt(det B) 2^{-r} |S^{r-1}| / (4 pi t)^{m/2 + r}.
// Convention: p(t, h, h') = p(t, 0, h^{-1} * h').

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <map>
#include <numbers>
#include <string>
#include <vector>

#include "json.hpp"
#include "qcheat/error.hpp"
#include "qcheat/group.hpp"
#include "qcheat/quadrature.hpp"
#include "qcheat/special.hpp"

namespace qcheat {

/// Driving variance of the diffusion generated by sum_a X_a^2: the horizontal
/// coordinates at time t are Gaussian with covariance kBrownianClock * t * Id.
inline constexpr double kBrownianClock = 2.0;

struct Estimate {
  double value = 0.0;
  double error = 0.0;
};

struct QuadratureConfig {
  double rel_tol = 1e-11;
  double abs_tol = 1e-18;
  double radial_truncation = 0.0;  // minimal cutoff R; raised until the tail bound fits
  long max_evals = 4'000'000;
  int parallel_chunks = 8;  // initial panel count

  void validate() const {
    if (!(rel_tol > 0) || !(abs_tol > 0)) throw InputError("quadrature tolerances must be positive");
    if (radial_truncation < 0) throw InputError("radial truncation must be nonnegative");
    if (max_evals < 21) throw InputError("max_evals too small");
    if (parallel_chunks < 1) throw InputError("parallel_chunks must be positive");
  }
};

inline void to_json(nlohmann::json& j, const QuadratureConfig& c) {
  j = {{"rel_tol", c.rel_tol},
       {"abs_tol", c.abs_tol},
       {"radial_truncation", c.radial_truncation},
       {"max_evals", c.max_evals},
       {"parallel_chunks", c.parallel_chunks}};
}

/// Multi-index over the m + r coordinates (x first, then z).
using MultiIndex = std::vector<unsigned>;

inline unsigned weighted_order(const MultiIndex& d, std::size_t m) {
  unsigned w = 0;
  for (std::size_t k = 0; k < d.size(); ++k) w += (k < m ? 1u : 2u) * d[k];
  return w;
}

inline constexpr unsigned kMaxDerivativeOrder = 4;

struct KernelQuery {
  double t = 1.0;
  GroupPoint<double> base;
  GroupPoint<double> target;
  MultiIndex derivative;  // acts on the target; empty means no derivative
};

/// phi(tau, x, z) = i <tau, z> + (1/2) |2 tau| coth |2 tau| |x|^2.
inline std::complex<double> action_function(const GroupSpec& spec, const std::vector<double>& tau,
                                            const GroupPoint<double>& h) {
  if (!spec.is_h_type()) throw InputError("action_function needs an H-type spec");
  if (tau.size() != spec.vertical_dim()) throw InputError("tau has wrong dimension");
  detail::check_dims(spec, h);
  double tz = 0.0, tt = 0.0, xx = 0.0;
  for (std::size_t i = 0; i < tau.size(); ++i) {
    tz += tau[i] * h.z[i];
    tt += tau[i] * tau[i];
  }
  for (double v : h.x) xx += v * v;
  return {0.5 * special::y_coth(2.0 * std::sqrt(tt)) * xx, tz};
}

/// W(tau) = (|2 tau| / sinh |2 tau|)^{m/2}.
inline double volume_element(const GroupSpec& spec, const std::vector<double>& tau) {
  if (!spec.is_h_type()) throw InputError("volume_element needs an H-type spec");
  if (tau.size() != spec.vertical_dim()) throw InputError("tau has wrong dimension");
  double tt = 0.0;
  for (double v : tau) tt += v * v;
  return special::y_over_sinh_pow(2.0 * std::sqrt(tt), spec.horizontal_dim() / 2.0);
}

namespace detail {

/// d^d/dx^d exp(-a x^2) = hermite_factor(d, x, a) exp(-a x^2).
inline double hermite_factor(unsigned d, double x, double a) {
  double sum = 0.0;
  for (unsigned b = 0; 2 * b <= d; ++b) {
    double c = std::tgamma(d + 1.0) / (std::tgamma(d - 2.0 * b + 1.0) * std::tgamma(b + 1.0));
    double s = ((d - b) % 2 == 0) ? 1.0 : -1.0;
    sum += s * c * std::pow(2.0 * a * x, static_cast<double>(d - 2 * b)) * std::pow(a, static_cast<double>(b));
  }
  return sum;
}

// Polynomial in rho with nonnegative coefficients, used for tail majorants.
using RhoPoly = std::vector<double>;

inline RhoPoly poly_mul(const RhoPoly& p, const RhoPoly& q) {
  RhoPoly out(p.size() + q.size() - 1, 0.0);
  for (std::size_t i = 0; i < p.size(); ++i)
    for (std::size_t j = 0; j < q.size(); ++j) out[i + j] += p[i] * q[j];
  return out;
}

struct XiTerm {
  double coef;
  MultiIndex dx, dz;
};

}  // namespace detail

/// Evaluates p(t, h, h') and its target derivatives for one spec and config.
class HeatKernel {
 public:
  explicit HeatKernel(const GroupSpec& spec, QuadratureConfig cfg = {}) : spec_(spec), cfg_(cfg) {
    if (!spec_.is_h_type())
      throw InputError("the radial heat-kernel reduction needs an H-type spec (J^i J^k + J^k J^i = -2 delta_ik)");
    cfg_.validate();
    m_ = spec_.horizontal_dim();
    r_ = spec_.vertical_dim();
    nu_ = r_ / 2.0 - 1.0;
    sqrt_det_b_ = 1.0 / spec_.haar().value();
  }

  const GroupSpec& spec() const noexcept { return spec_; }
  const QuadratureConfig& config() const noexcept { return cfg_; }

  /// K(t): converts the reduced radial integral to kernel units.
  double prefactor(double t) const {
    return sqrt_det_b_ * std::pow(2.0, -static_cast<double>(r_)) * special::sphere_area(r_) /
           std::pow(4.0 * std::numbers::pi * t, m_ / 2.0 + r_);
  }

  Estimate operator()(const KernelQuery& q) const {
    if (!(q.t > 0) || !std::isfinite(q.t)) throw InputError("kernel time must be positive");
    detail::check_dims(spec_, q.base);
    detail::check_dims(spec_, q.target);
    MultiIndex d = q.derivative;
    if (d.empty()) d.assign(m_ + r_, 0);
    if (d.size() != m_ + r_) throw InputError("derivative multi-index has wrong length");
    if (weighted_order(d, m_) > kMaxDerivativeOrder)
      throw InputError("derivative weighted order above " + std::to_string(kMaxDerivativeOrder) + " is unsupported");
    GroupPoint<double> xi = group_mul(spec_, group_inverse(spec_, q.base), q.target);
    return evaluate(q.t, xi, expand_derivative(q.base, d));
  }

  /// p(t, 0, h) or a derivative in h.
  Estimate at(double t, const GroupPoint<double>& h, const MultiIndex& d = {}) const {
    return (*this)(KernelQuery{t, identity_point<double>(spec_), h, d});
  }

  Estimate diagonal(double t) const { return at(t, identity_point<double>(spec_)); }

 private:
  // d/dx'_b = d/dxi_b + sum_i c_{bi} d/dxi_{z_i}, c_{bi} = -2 sum_a J^i_{ab} x_a.
  std::vector<detail::XiTerm> expand_derivative(const GroupPoint<double>& base, const MultiIndex& d) const {
    std::map<MultiIndex, double> ops{{MultiIndex(m_ + r_, 0), 1.0}};
    auto apply = [&](const std::map<MultiIndex, double>& step) {
      std::map<MultiIndex, double> out;
      for (const auto& [mi, c] : ops)
        for (const auto& [si, sc] : step) {
          MultiIndex sum = mi;
          for (std::size_t k = 0; k < sum.size(); ++k) sum[k] += si[k];
          out[sum] += c * sc;
        }
      ops = std::move(out);
    };
    for (std::size_t b = 0; b < m_; ++b) {
      std::map<MultiIndex, double> step;
      MultiIndex e(m_ + r_, 0);
      e[b] = 1;
      step[e] = 1.0;
      for (std::size_t i = 0; i < r_; ++i) {
        double c = 0.0;
        for (std::size_t a = 0; a < m_; ++a) c -= 2.0 * spec_.structure_double(i)(a, b) * base.x[a];
        if (c == 0.0) continue;
        MultiIndex ez(m_ + r_, 0);
        ez[m_ + i] = 1;
        step[ez] += c;
      }
      for (unsigned k = 0; k < d[b]; ++k) apply(step);
    }
    for (std::size_t i = 0; i < r_; ++i) {
      MultiIndex ez(m_ + r_, 0);
      ez[m_ + i] = 1;
      for (unsigned k = 0; k < d[m_ + i]; ++k) apply({{ez, 1.0}});
    }
    std::vector<detail::XiTerm> terms;
    for (const auto& [mi, c] : ops) {
      if (c == 0.0) continue;
      terms.push_back({c, MultiIndex(mi.begin(), mi.begin() + m_), MultiIndex(mi.begin() + m_, mi.end())});
    }
    return terms;
  }

  // Sum over b-vectors of prod_i g_i!/(a_i! b_i!) (2 k^2 z_i)^{a_i} (k^2)^{b_i} F^{(N)},
  // F^{(N)} = (-1/4)^N / (nu+1)_N Lambda_{nu+N}(k |z|).
  template <typename Visit>
  void visit_z_terms(const MultiIndex& g, Visit&& visit) const {
    std::vector<unsigned> b(r_, 0);
    while (true) {
      double comb = 1.0;
      unsigned n_total = 0;
      std::vector<unsigned> a(r_);
      for (std::size_t i = 0; i < r_; ++i) {
        a[i] = g[i] - 2 * b[i];
        comb *= std::tgamma(g[i] + 1.0) / (std::tgamma(a[i] + 1.0) * std::tgamma(b[i] + 1.0));
        n_total += a[i] + b[i];
      }
      visit(comb, a, b, n_total);
      std::size_t i = 0;
      for (; i < r_; ++i) {
        if (2 * (b[i] + 1) <= g[i]) {
          ++b[i];
          break;
        }
        b[i] = 0;
      }
      if (i == r_) break;
    }
  }

  double integrand(double rho, double t, const GroupPoint<double>& xi, double xx, double zn,
                   const std::vector<detail::XiTerm>& terms, unsigned max_n) const {
    const double a = special::y_coth(rho) / (4.0 * t);
    const double k = rho / (4.0 * t);
    const double k2 = k * k;
    double base = std::pow(rho, static_cast<double>(r_) - 1.0) * special::y_over_sinh_pow(rho, m_ / 2.0) *
                  std::exp(-a * xx);
    if (base == 0.0) return 0.0;
    double lam[kMaxDerivativeOrder * 4 + 1];
    double poch = 1.0;
    for (unsigned nn = 0; nn <= max_n; ++nn) {
      lam[nn] = std::pow(-0.25, nn) / poch * special::bessel_lambda(nu_ + nn, k * zn);
      poch *= nu_ + 1.0 + nn;
    }
    double sum = 0.0;
    for (const auto& term : terms) {
      double xf = 1.0;
      for (std::size_t al = 0; al < m_; ++al)
        if (term.dx[al] != 0) xf *= detail::hermite_factor(term.dx[al], xi.x[al], a);
      double zf = 0.0;
      visit_z_terms(term.dz, [&](double comb, const std::vector<unsigned>& av, const std::vector<unsigned>& bv,
                                 unsigned nt) {
        double v = comb * lam[nt];
        for (std::size_t i = 0; i < r_; ++i)
          v *= std::pow(2.0 * k2 * xi.z[i], static_cast<double>(av[i])) * std::pow(k2, static_cast<double>(bv[i]));
        zf += v;
      });
      sum += term.coef * xf * zf;
    }
    return base * sum;
  }

  // Polynomial majorant of |sum| for rho >= R (everything except the
  // rho^{r-1} (rho/sinh rho)^{m/2} weight).
  detail::RhoPoly majorant(double R, double t, const GroupPoint<double>& xi,
                           const std::vector<detail::XiTerm>& terms) const {
    const double amax = 1.0 / (std::tanh(R) * 4.0 * t);  // a <= amax * rho
    const double kk = 1.0 / (4.0 * t);                   // k = kk * rho
    detail::RhoPoly total{0.0};
    for (const auto& term : terms) {
      detail::RhoPoly p{std::abs(term.coef)};
      for (std::size_t al = 0; al < m_; ++al) {
        unsigned d = term.dx[al];
        if (d == 0) continue;
        detail::RhoPoly q(d + 1, 0.0);
        for (unsigned b = 0; 2 * b <= d; ++b) {
          double c = std::tgamma(d + 1.0) / (std::tgamma(d - 2.0 * b + 1.0) * std::tgamma(b + 1.0));
          q[d - b] += c * std::pow(2.0 * amax * std::abs(xi.x[al]), static_cast<double>(d - 2 * b)) *
                      std::pow(amax, static_cast<double>(b));
        }
        p = detail::poly_mul(p, q);
      }
      detail::RhoPoly zq{0.0};
      visit_z_terms(term.dz, [&](double comb, const std::vector<unsigned>& av, const std::vector<unsigned>& bv,
                                 unsigned nt) {
        double poch = 1.0;
        for (unsigned j = 0; j < nt; ++j) poch *= nu_ + 1.0 + j;
        double c = comb * std::pow(0.25, nt) / poch;
        unsigned deg = 0;
        for (std::size_t i = 0; i < r_; ++i) {
          c *= std::pow(2.0 * kk * kk * std::abs(xi.z[i]), static_cast<double>(av[i])) *
               std::pow(kk * kk, static_cast<double>(bv[i]));
          deg += 2 * (av[i] + bv[i]);
        }
        if (zq.size() < deg + 1) zq.resize(deg + 1, 0.0);
        zq[deg] += c;
      });
      p = detail::poly_mul(p, zq);
      if (total.size() < p.size()) total.resize(p.size(), 0.0);
      for (std::size_t i = 0; i < p.size(); ++i) total[i] += p[i];
    }
    return total;
  }

  double tail_bound(double R, const detail::RhoPoly& maj) const {
    const double half_m = m_ / 2.0;
    double scale = std::pow(2.0, half_m) / std::pow(-std::expm1(-2.0 * R), half_m);
    double s = 0.0;
    for (std::size_t p = 0; p < maj.size(); ++p)
      if (maj[p] != 0.0)
        s += maj[p] * special::exp_poly_tail(static_cast<unsigned>(p + r_ - 1 + m_ / 2), half_m, R);
    return scale * s;
  }

  Estimate evaluate(double t, const GroupPoint<double>& xi, const std::vector<detail::XiTerm>& terms) const {
    const double K = prefactor(t);
    double xx = 0.0, zz = 0.0;
    for (double v : xi.x) xx += v * v;
    for (double v : xi.z) zz += v * v;
    const double zn = std::sqrt(zz);
    unsigned max_n = 0;
    for (const auto& term : terms) {
      unsigned s = 0;
      for (unsigned v : term.dz) s += v;
      max_n = std::max(max_n, s);
    }
    // Truncation: smallest R (step 1) with tail below abs_tol / 10.
    const double tail_target = cfg_.abs_tol / (10.0 * K);
    double R = std::max(cfg_.radial_truncation, 4.0);
    double tail = 0.0;
    for (;; R += 1.0) {
      tail = tail_bound(R, majorant(R, t, xi, terms));
      if (tail <= tail_target) break;
      if (R > 2000.0) throw NumericFailure("radial tail bound not reachable", 0.0, tail * K);
    }
    // Resolve oscillation of Lambda(rho |z| / 4t): about one panel per half period.
    const double half_periods = R * zn / (4.0 * t) / std::numbers::pi;
    const int panels = std::max(cfg_.parallel_chunks, static_cast<int>(std::min(half_periods, 1e5)) + 1);
    auto f = [&](double rho) { return integrand(rho, t, xi, xx, zn, terms, max_n); };
    QuadResult q = integrate_gk21(f, 0.0, R, cfg_.abs_tol / K, cfg_.rel_tol, cfg_.max_evals, panels);
    Estimate est{K * q.value, K * (q.error + tail)};
    if (!q.converged) throw NumericFailure("kernel quadrature did not reach tolerance", est.value, est.error);
    return est;
  }

  GroupSpec spec_;
  QuadratureConfig cfg_;
  std::size_t m_ = 0, r_ = 0;
  double nu_ = 0.0;
  double sqrt_det_b_ = 1.0;
};

inline Estimate heat_kernel(const GroupSpec& spec, const KernelQuery& query, const QuadratureConfig& cfg = {}) {
  return HeatKernel(spec, cfg)(query);
}

}  // namespace qcheat
