// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "qcheat/qcheat.hpp"

using namespace qcheat;

namespace {

// Pinned tolerances.
constexpr double kC0Exact = 1e-10;
constexpr double kC0Oracle = 1e-12;
constexpr double kMassTol = 1e-6;
constexpr double kSigmaZero = 3.0;
constexpr double kSigmaNonzero = 5.0;
constexpr double kSphereRel = 1e-8;
constexpr double kSpectralRel = 1e-4;

constexpr std::uint64_t kSeed = 20241;
constexpr std::size_t kPaths = 100000;
constexpr std::size_t kSteps = 1000;
constexpr std::size_t kMomentPaths = 20000;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

SimConfig diffusion_config() {
  SimConfig c;
  c.spec = make_quaternionic_spec(1);
  c.t = 1.0;
  c.n_paths = kPaths;
  c.n_steps = kSteps;
  c.seed = kSeed;
  return c;
}

const SampleSet& diffusion_samples() {
  static const SampleSet s = simulate_paths(diffusion_config());
  return s;
}

Outcome c0_exactness() {
  Estimate c = compute_c0(1);
  const double o = oracle::c0(1);
  const double d_exact = std::abs(c.value - 1.0 / 120.0), d_oracle = std::abs(c.value - o);
  return {d_exact <= kC0Exact && d_oracle <= kC0Oracle,
          fmt("c0(1) = %.17g, |c0 - 1/120| = %.2e, |c0 - series| = %.2e", c.value, d_exact, d_oracle)};
}

Outcome two_path_consistency() {
  Outcome o{true, ""};
  for (unsigned n = 1; n <= 3; ++n) {
    Estimate p = HeatKernel(make_quaternionic_spec(n)).diagonal(1.0);
    Estimate c = compute_c0(n);
    const double d = std::abs(p.value - c.value), bound = p.error + c.error;
    o.pass = o.pass && d <= bound;
    o.detail += fmt("n=%u |p-c0| = %.2e <= %.2e; ", n, d, bound);
  }
  return o;
}

Outcome homogeneity() {
  Outcome o{true, ""};
  for (unsigned n = 1; n <= 2; ++n) {
    HeatKernel k(make_quaternionic_spec(n));
    const Estimate ref = k.diagonal(1.0);
    double worst = 0.0;
    for (double t : {0.25, 0.5, 1.0, 2.0, 4.0}) {
      const Estimate p = k.diagonal(t);
      const double s = std::pow(t, 2.0 * n + 3.0);
      const double d = std::abs(p.value * s - ref.value), bound = p.error * s + ref.error;
      o.pass = o.pass && d <= bound;
      worst = std::max(worst, d / bound);
    }
    o.detail += fmt("n=%u max deviation/bound = %.2f; ", n, worst);
  }
  return o;
}

Outcome normalization_and_semigroup() {
  const SimConfig c = diffusion_config();
  Estimate mass = kernel_total_mass(c.spec, 1.0);
  HeatKernel k(c.spec);
  SemigroupCheck sg = semigroup_check(c, diffusion_samples(), k);
  const double dm = std::abs(mass.value - 1.0);
  const double sig = sg.discrepancy_in_sigma();
  return {dm <= kMassTol && mass.error <= kMassTol && sig < kSigmaZero,
          fmt("mass = %.12f (err %.1e); E[p(1,0,g)] = %.5e +- %.1e vs p(2,0,0) = %.5e (%.2f sigma)", mass.value,
              mass.error, sg.estimate.estimate, sg.estimate.stderr_, sg.reference.value, sig)};
}

Outcome popp_matrix_exact() {
  Outcome o{true, ""};
  for (unsigned n = 1; n <= 4; ++n) {
    auto d = popp_density(adapted_frame_from_group(make_quaternionic_spec(n)));
    const bool ok = d.B == Rational(16 * n) * Matrix<Rational>::identity(3) &&
                    d.det == Rational(16 * n) * Rational(16 * n) * Rational(16 * n) &&
                    std::abs(d.value - std::pow(16.0 * n, -1.5)) <= 1e-16;
    o.pass = o.pass && ok;
    o.detail += fmt("n=%u B=%uId density=%.6e; ", n, 16 * n, d.value);
  }
  return o;
}

Outcome expansion_routes() {
  Outcome o{true, ""};
  for (unsigned n = 1; n <= 2; ++n) {
    auto spec = make_quaternionic_spec(n);
    TensorSymbols ts(n);
    const bool eq = closed_form_coefficients(spec, ts) == inverted_coefficients(spec, build_coframe(spec, ts));
    o.pass = o.pass && eq;
    o.detail += fmt("n=%u %s; ", n, eq ? "identical" : "DIFFER");
  }
  return o;
}

Outcome c1_reduction() {
  Outcome o{true, ""};
  for (unsigned n = 1; n <= 2; ++n) {
    auto spec = make_quaternionic_spec(n);
    try {
      C1Reduction full = reduce_c1(spec, TensorSymbols(n));
      C1Reduction tors = reduce_c1(spec, TensorSymbols(n, true, false));
      const std::string line = full.final_line();
      const bool ok = !full.is_zero() && line.find("kappa") != std::string::npos && tors.is_zero();
      o.pass = o.pass && ok;
      o.detail += fmt("n=%u %zu classes, torsion-only: %s; ", n, full.classes.size(), tors.final_line().c_str());
      if (n == 1) o.detail += line + "; ";
    } catch (const InvariantViolation& e) {
      o.pass = false;
      o.detail += fmt("n=%u %s; ", n, e.what());
    }
  }
  return o;
}

Outcome sphere_cross_check() {
  Outcome o{true, ""};
  for (unsigned n = 1; n <= 2; ++n) {
    const double lhs = compute_Cn(n).value * 16.0 * n * (n + 2.0);
    const double ref = oracle::sphere_c1(n);
    const double rel = std::abs(lhs / ref - 1.0);
    o.pass = o.pass && rel < kSphereRel;
    o.detail += fmt("n=%u rel = %.2e; ", n, rel);
  }
  return o;
}

Outcome moment_rules() {
  SimConfig c = diffusion_config();
  const SampleSet& all = diffusion_samples();
  SampleSet s{all.m, all.r, {all.x.begin(), all.x.begin() + kMomentPaths * all.m},
              {all.z.begin(), all.z.begin() + kMomentPaths * all.r}};
  c.n_paths = kMomentPaths;
  QuadratureConfig q;
  q.rel_tol = 1e-9;
  q.abs_tol = 1e-13;
  HeatKernel k(c.spec, q);
  Outcome o{true, ""};
  bool nonzero_rule4 = false;
  for (int rule = 1; rule <= 4; ++rule)
    for (const auto& mc : check_moment_vanishing(c, rule, s, k)) {
      const double z = std::abs(mc.estimate.estimate) / mc.estimate.stderr_;
      if (mc.moment.expect_zero)
        o.pass = o.pass && z < kSigmaZero;
      else if (rule == 4 && z > kSigmaNonzero)
        nonzero_rule4 = true;
      o.detail += fmt("%s %.2f sigma; ", mc.moment.name.c_str(), z);
    }
  o.pass = o.pass && nonzero_rule4;
  return o;
}

Outcome spectral_recovery() {
  const double Q = 10, A = 1.0 / 120, B = 0.01;
  auto t = default_time_grid();
  std::vector<double> tr;
  for (double s : t) tr.push_back(std::pow(s, -Q / 2) * (A + B * s));
  SpectralFit f = fit_heat_trace(t, tr);
  const double eq = std::abs(f.Q / Q - 1), ea = std::abs(f.A / A - 1), eb = std::abs(f.B / B - 1);
  return {eq < kSpectralRel && ea < kSpectralRel && eb < kSpectralRel,
          fmt("Q = %.12f A = %.12e B = %.12e (rel %.1e %.1e %.1e)", f.Q, f.A, f.B, eq, ea, eb)};
}

Outcome diffusion_moments_check() {
  const SimConfig c = diffusion_config();
  auto mom = diffusion_moments(c, diffusion_samples());
  MomentTable mt = kernel_marginal_moments(c.spec, c.t);
  Outcome o{true, ""};
  double worst_x = 0, worst_z = 0;
  for (const auto& e : mom) {
    if (e.quantity.starts_with("E[x") && e.quantity.ends_with("^2]")) {
      const double z = std::abs(e.estimate - kBrownianClock * c.t) / e.stderr_;
      worst_x = std::max(worst_x, z);
    } else if (e.quantity.starts_with("E[z")) {
      const double z = std::abs(e.estimate - mt.second_z.value) / std::hypot(e.stderr_, mt.second_z.error);
      worst_z = std::max(worst_z, z);
    }
  }
  o.pass = worst_x < kSigmaZero && worst_z < kSigmaZero;
  o.detail = fmt("max |E[x^2] - 2t| = %.2f sigma, max |E[z^2] - %.6f| = %.2f sigma", worst_x, mt.second_z.value,
                 worst_z);
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"c0 exactness", c0_exactness},
      {"kernel diagonal equals c0", two_path_consistency},
      {"parabolic homogeneity", homogeneity},
      {"normalization and semigroup", normalization_and_semigroup},
      {"Popp matrix", popp_matrix_exact},
      {"frame expansion routes", expansion_routes},
      {"c1 reduction", c1_reduction},
      {"sphere cross-check", sphere_cross_check},
      {"moment-vanishing rules", moment_rules},
      {"spectral extraction", spectral_recovery},
      {"diffusion moments", diffusion_moments_check},
  };
  int failed = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[k].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("[%s] %2zu %s: %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", k + 1, criteria[k].first.c_str(),
                o.detail.c_str(), secs);
    std::fflush(stdout);
    failed += !o.pass;
  }
  std::printf("%d of %zu criteria failed\n", failed, criteria.size());
  return failed ? 1 : 0;
}
