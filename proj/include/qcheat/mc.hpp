#pragma once

// Monte Carlo for the horizontal diffusion generated by sum X~_a^2:
//   dx = sqrt(2) dB,   dz_i = 2 sum_{b,a} J^i_{ba} x_b dx_a,
// Euler-Maruyama with Philox draws keyed by (seed, path, step).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"
#include "qcheat/error.hpp"
#include "qcheat/group.hpp"
#include "qcheat/kernel.hpp"
#include "qcheat/rng.hpp"

namespace qcheat {

enum class Estimator { moments, convolution_moment, expectation };

struct SimConfig {
  GroupSpec spec = make_quaternionic_spec(1);
  double t = 1.0;
  std::size_t n_paths = 100000;
  std::size_t n_steps = 1000;
  std::uint64_t seed = 0;
  Estimator estimator = Estimator::moments;
  double budget = 1e10;   // cap on n_paths * n_steps
  unsigned threads = 0;   // 0: QCHEAT_THREADS or hardware concurrency

  void validate() const {
    if (!(t > 0) || !std::isfinite(t)) throw InputError("simulation time must be positive");
    if (n_paths < 2) throw InputError("need at least two paths");
    if (n_steps == 0) throw InputError("need at least one step");
    if (static_cast<double>(n_paths) * static_cast<double>(n_steps) > budget)
      throw InputError("paths x steps exceeds the configured budget");
  }
};

inline void to_json(nlohmann::json& j, const SimConfig& c) {
  static const char* names[] = {"moments", "convolution-moment", "expectation"};
  j = {{"n", c.spec.level()}, {"t", c.t}, {"paths", c.n_paths}, {"steps", c.n_steps},
       {"seed", c.seed}, {"estimator", names[static_cast<int>(c.estimator)]}};
}

/// Worker count: explicit, else QCHEAT_THREADS, else hardware concurrency.
inline unsigned worker_count(unsigned requested = 0) {
  if (requested) return requested;
  if (const char* env = std::getenv("QCHEAT_THREADS")) {
    int v = std::atoi(env);
    if (v > 0) return static_cast<unsigned>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

namespace detail {
inline constexpr std::size_t kBlockPaths = 1024;

/// Runs body(block_begin, block_end) over fixed path blocks on a worker pool.
/// Results must be stored per block so the reduction order never depends on
/// the thread count.
inline void for_blocks(std::size_t n, unsigned threads, const std::function<void(std::size_t, std::size_t)>& body) {
  const std::size_t blocks = (n + kBlockPaths - 1) / kBlockPaths;
  const unsigned w = static_cast<unsigned>(std::min<std::size_t>(worker_count(threads), blocks));
  auto run = [&](unsigned id) {
    for (std::size_t b = id; b < blocks; b += w) body(b * kBlockPaths, std::min(n, (b + 1) * kBlockPaths));
  };
  if (w <= 1) {
    run(0);
    return;
  }
  std::vector<std::thread> pool;
  for (unsigned id = 0; id < w; ++id) pool.emplace_back(run, id);
  for (auto& th : pool) th.join();
}

/// Fills out[0..m) with the standard normals of (path, step).
inline void normals(const Philox4x32& rng, std::uint64_t path, std::uint32_t step, std::size_t m, double* out) {
  for (std::size_t k = 0; k < m; k += 4) {
    auto blk = rng(path, step, static_cast<std::uint32_t>(k / 4));
    auto a = box_muller(blk[0], blk[1]);
    auto b = box_muller(blk[2], blk[3]);
    const double v[4] = {a[0], a[1], b[0], b[1]};
    for (std::size_t j = 0; j < 4 && k + j < m; ++j) out[k + j] = v[j];
  }
}
}  // namespace detail

/// Terminal samples, row-major (path, coordinate).
struct SampleSet {
  std::size_t m = 0, r = 0;
  std::vector<double> x, z;
  std::size_t size() const noexcept { return m ? x.size() / m : 0; }
  GroupPoint<double> point(std::size_t p) const {
    return {{x.begin() + p * m, x.begin() + (p + 1) * m}, {z.begin() + p * r, z.begin() + (p + 1) * r}};
  }
};

/// Simulates n_paths paths with n_steps steps. With coarsen = c > 1 each step
/// consumes c consecutive fine increments (of a run with n_steps * c steps),
/// which couples coarse and fine paths driven by the same noise.
inline SampleSet simulate_paths(const SimConfig& cfg, unsigned coarsen = 1) {
  cfg.validate();
  if (coarsen == 0) throw InputError("coarsening factor must be positive");
  const GroupSpec& spec = cfg.spec;
  const std::size_t m = spec.horizontal_dim(), r = spec.vertical_dim();
  const std::size_t fine_steps = cfg.n_steps * coarsen;
  if (fine_steps > 0xFFFFFFFFull) throw InputError("too many steps");
  const double dt = cfg.t / static_cast<double>(fine_steps);
  const double sd = std::sqrt(kBrownianClock * dt);
  // sparse J^i_{ba}
  struct Entry {
    std::size_t i, b, a;
    double v;
  };
  std::vector<Entry> js;
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t b = 0; b < m; ++b)
      for (std::size_t a = 0; a < m; ++a)
        if (double v = spec.structure_double(i)(b, a); v != 0.0) js.push_back({i, b, a, 2.0 * v});
  SampleSet out{m, r, std::vector<double>(cfg.n_paths * m), std::vector<double>(cfg.n_paths * r)};
  const Philox4x32 rng(cfg.seed);
  detail::for_blocks(cfg.n_paths, cfg.threads, [&](std::size_t p0, std::size_t p1) {
    std::vector<double> x(m), z(r), dx(m), xi(m);
    for (std::size_t p = p0; p < p1; ++p) {
      std::fill(x.begin(), x.end(), 0.0);
      std::fill(z.begin(), z.end(), 0.0);
      for (std::size_t s = 0; s < cfg.n_steps; ++s) {
        std::fill(dx.begin(), dx.end(), 0.0);
        for (unsigned c = 0; c < coarsen; ++c) {
          detail::normals(rng, p, static_cast<std::uint32_t>(s * coarsen + c), m, xi.data());
          for (std::size_t a = 0; a < m; ++a) dx[a] += sd * xi[a];
        }
        for (const auto& e : js) z[e.i] += e.v * x[e.b] * dx[e.a];
        for (std::size_t a = 0; a < m; ++a) x[a] += dx[a];
      }
      std::copy(x.begin(), x.end(), out.x.begin() + p * m);
      std::copy(z.begin(), z.end(), out.z.begin() + p * r);
    }
  });
  return out;
}

/// One row of the statistical report.
struct McEstimate {
  std::string quantity;
  double estimate = 0.0;
  double stderr_ = 0.0;
  std::size_t n_paths = 0;
  std::size_t n_steps = 0;
  std::uint64_t seed = 0;
};

inline void write_csv(std::ostream& os, const std::vector<McEstimate>& rows) {
  os << "quantity,estimate,stderr,n_paths,n_steps,seed\n";
  char buf[64];
  for (const auto& e : rows) {
    os << e.quantity;
    std::snprintf(buf, sizeof buf, ",%.17g", e.estimate);
    os << buf;
    std::snprintf(buf, sizeof buf, ",%.17g", e.stderr_);
    os << buf << "," << e.n_paths << "," << e.n_steps << "," << e.seed << "\n";
  }
}

/// Mean and standard error of per-path values, summed in fixed block order.
inline Estimate sample_mean(const std::vector<double>& v) {
  const std::size_t n = v.size();
  if (n < 2) throw InputError("need at least two samples");
  const std::size_t B = detail::kBlockPaths;
  double s = 0.0;
  for (std::size_t b = 0; b < n; b += B) {
    double part = 0.0;
    for (std::size_t i = b; i < std::min(n, b + B); ++i) part += v[i];
    s += part;
  }
  const double mean = s / static_cast<double>(n);
  double q = 0.0;
  for (std::size_t b = 0; b < n; b += B) {
    double part = 0.0;
    for (std::size_t i = b; i < std::min(n, b + B); ++i) part += (v[i] - mean) * (v[i] - mean);
    q += part;
  }
  return {mean, std::sqrt(q / static_cast<double>(n - 1) / static_cast<double>(n))};
}

/// E[x_1], E[x_a^2] for a = 1.., E[z_i^2] for i = 1.. with standard errors.
inline std::vector<McEstimate> diffusion_moments(const SimConfig& cfg, const SampleSet& s) {
  std::vector<McEstimate> out;
  const std::size_t n = s.size();
  std::vector<double> v(n);
  auto push = [&](const std::string& name) {
    Estimate e = sample_mean(v);
    out.push_back({name, e.value, e.error, n, cfg.n_steps, cfg.seed});
  };
  for (std::size_t a = 0; a < s.m; ++a) {
    for (std::size_t p = 0; p < n; ++p) v[p] = s.x[p * s.m + a];
    push("E[x" + std::to_string(a + 1) + "]");
  }
  for (std::size_t a = 0; a < s.m; ++a) {
    for (std::size_t p = 0; p < n; ++p) v[p] = s.x[p * s.m + a] * s.x[p * s.m + a];
    push("E[x" + std::to_string(a + 1) + "^2]");
  }
  for (std::size_t i = 0; i < s.r; ++i) {
    for (std::size_t p = 0; p < n; ++p) v[p] = s.z[p * s.r + i] * s.z[p * s.r + i];
    push("E[z" + std::to_string(i + 1) + "^2]");
  }
  return out;
}

/// Coupled Euler bias check: moments from n_steps and 2 n_steps driven by the same noise.
struct WeakConvergence {
  std::vector<McEstimate> coarse, fine;
  /// max over quantities of |fine - coarse| / stderr(fine)
  double max_shift_in_stderr() const {
    double w = 0.0;
    for (std::size_t k = 0; k < fine.size(); ++k)
      if (fine[k].stderr_ > 0) w = std::max(w, std::abs(fine[k].estimate - coarse[k].estimate) / fine[k].stderr_);
    return w;
  }
};

inline WeakConvergence weak_convergence_check(SimConfig cfg) {
  WeakConvergence wc;
  SimConfig fine = cfg;
  fine.n_steps = 2 * cfg.n_steps;
  wc.fine = diffusion_moments(fine, simulate_paths(fine));
  wc.coarse = diffusion_moments(cfg, simulate_paths(cfg, 2));
  return wc;
}

/// A convolution moment
///   int_0^1 int p(1-s, 0, g) g^e d^f p(s, g, 0) dmu(g) ds
/// over the coordinates (x_1..x_m, z_1..z_r): e and f are exponent vectors.
struct ConvolutionMoment {
  std::string name;
  std::vector<unsigned> e, f;
  bool expect_zero = true;
};

/// The moment shapes of the vanishing argument, 0-based coordinates at n = 1.
/// rule 1: x_a x_b dz_i; rule 2: x_a x_b dx_c dx_d; rule 3: dz_i; rule 4: x x x x dz_i dz_j.
inline std::vector<ConvolutionMoment> moment_rule_cases(const GroupSpec& spec, int rule) {
  const std::size_t m = spec.horizontal_dim(), N = spec.dim();
  auto mk = [&](std::string name, std::vector<std::size_t> xs, std::vector<std::size_t> ds, bool zero) {
    ConvolutionMoment c{std::move(name), std::vector<unsigned>(N, 0), std::vector<unsigned>(N, 0), zero};
    for (auto k : xs) ++c.e[k];
    for (auto k : ds) ++c.f[k];
    return c;
  };
  if (m < 4) throw InputError("moment rules need at least four horizontal directions");
  switch (rule) {
    case 1:
      return {mk("rule1 x1x1 dz1", {0, 0}, {m}, true), mk("rule1 x1x2 dz1", {0, 1}, {m}, true)};
    case 2:
      return {mk("rule2 x1x2 dx3dx4", {0, 1}, {2, 3}, true), mk("rule2 x1x2 dx1dx3", {0, 1}, {0, 2}, true),
              mk("rule2 x1x1 dx2dx2", {0, 0}, {1, 1}, false)};
    case 3:
      return {mk("rule3 dz1", {}, {m}, true)};
    case 4:
      return {mk("rule4 x1x1x2x2 dz1dz2", {0, 0, 1, 1}, {m, m + 1}, true),
              mk("rule4 x1x2x3x3 dz1dz1", {0, 1, 2, 2}, {m, m}, true),
              mk("rule4 x1x1x2x2 dz1dz1", {0, 0, 1, 1}, {m, m}, false)};
    default:
      throw InputError("moment rule must be 1, 2, 3 or 4");
  }
}

namespace detail {
inline double point_power(const GroupPoint<double>& g, const std::vector<unsigned>& e, std::size_t m) {
  double v = 1.0;
  for (std::size_t k = 0; k < e.size(); ++k)
    for (unsigned j = 0; j < e[k]; ++j) v *= k < m ? g.x[k] : g.z[k - m];
  return v;
}
/// d^g (xi^e) at xi.
inline double monomial_derivative(const GroupPoint<double>& g, const std::vector<unsigned>& e,
                                  const std::vector<unsigned>& d, std::size_t m) {
  double v = 1.0;
  for (std::size_t k = 0; k < e.size(); ++k) {
    if (d[k] > e[k]) return 0.0;
    const double c = k < m ? g.x[k] : g.z[k - m];
    for (unsigned j = 0; j < d[k]; ++j) v *= e[k] - j;
    v *= std::pow(c, static_cast<double>(e[k] - d[k]));
  }
  return v;
}
inline GroupPoint<double> dilate_sqrt(const GroupPoint<double>& g, double tau) {
  GroupPoint<double> h = g;
  const double s = std::sqrt(tau);
  for (auto& v : h.x) v *= s;
  for (auto& v : h.z) v *= tau;
  return h;
}
}  // namespace detail

/// Verdict of a statistical check.
enum class Verdict { pass, fail, inconclusive };

struct MomentCheck {
  ConvolutionMoment moment;
  McEstimate estimate;
  Verdict verdict = Verdict::inconclusive;
};

/// Nested estimator of a convolution moment from samples g ~ p(1, 0, .):
/// s ~ U(0, 1) per path; for s >= 1/2 the outer point is delta_{sqrt(1-s)} g
/// and the inner factor d^f p(s, 0, .) comes from kernel quadrature; for
/// s < 1/2 the derivatives are moved onto p(1-s, 0, .) g^e by parts and the
/// point is delta_{sqrt(s)} g. Kernel parity p(s, g, 0) = p(s, 0, g) is used.
inline McEstimate convolution_moment(const SimConfig& cfg, const SampleSet& samples, const ConvolutionMoment& mom,
                                     const HeatKernel& kernel) {
  const std::size_t m = samples.m, N = samples.m + samples.r;
  const std::size_t n = samples.size();
  if (std::abs(cfg.t - 1.0) > 1e-15) throw InputError("convolution moments need samples at t = 1");
  if (mom.e.size() != N || mom.f.size() != N) throw InputError("moment exponent vectors have wrong length");
  unsigned fsum = 0;
  for (unsigned v : mom.f) fsum += v;
  const Philox4x32 rng(cfg.seed ^ 0x5DEECE66DULL);
  std::vector<double> vals(n);
  detail::for_blocks(n, cfg.threads, [&](std::size_t p0, std::size_t p1) {
    for (std::size_t p = p0; p < p1; ++p) {
      const double s = uniform_open(rng(p, 0xFFFFFFFFu, 0)[0]);
      const GroupPoint<double> g = samples.point(p);
      if (s >= 0.5) {
        GroupPoint<double> h = detail::dilate_sqrt(g, 1.0 - s);
        vals[p] = detail::point_power(h, mom.e, m) * kernel.at(s, h, mom.f).value;
        continue;
      }
      GroupPoint<double> h = detail::dilate_sqrt(g, s);
      // (-1)^{|f|} sum_{gamma <= f} C(f, gamma) d^gamma(h^e) d^{f-gamma} p(1-s, 0, h)
      double acc = 0.0;
      std::vector<unsigned> gam(N, 0);
      while (true) {
        double binom = 1.0;
        for (std::size_t k = 0; k < N; ++k)
          for (unsigned j = 0; j < gam[k]; ++j) binom *= static_cast<double>(mom.f[k] - j) / (j + 1);
        double mono = detail::monomial_derivative(h, mom.e, gam, m);
        if (mono != 0.0) {
          std::vector<unsigned> rest(N);
          for (std::size_t k = 0; k < N; ++k) rest[k] = mom.f[k] - gam[k];
          acc += binom * mono * kernel.at(1.0 - s, h, rest).value;
        }
        std::size_t k = 0;
        for (; k < N; ++k) {
          if (gam[k] < mom.f[k]) {
            ++gam[k];
            break;
          }
          gam[k] = 0;
        }
        if (k == N) break;
      }
      vals[p] = (fsum % 2 ? -1.0 : 1.0) * acc;
    }
  });
  Estimate e = sample_mean(vals);
  return {mom.name, e.value, e.error, n, cfg.n_steps, cfg.seed};
}

/// Runs the cases of one moment rule. Vanishing cases pass when |est| < 3
/// stderr; the nonvanishing control passes when |est| > 5 stderr. A standard
/// error above stderr_ceiling makes the verdict inconclusive.
inline std::vector<MomentCheck> check_moment_vanishing(const SimConfig& cfg, int rule, const SampleSet& samples,
                                                       const HeatKernel& kernel, double stderr_ceiling = 1e300) {
  std::vector<MomentCheck> out;
  for (const auto& c : moment_rule_cases(cfg.spec, rule)) {
    MomentCheck mc{c, convolution_moment(cfg, samples, c, kernel)};
    const double z = std::abs(mc.estimate.estimate) / mc.estimate.stderr_;
    if (!(mc.estimate.stderr_ <= stderr_ceiling))
      mc.verdict = Verdict::inconclusive;
    else if (c.expect_zero)
      mc.verdict = z < 3.0 ? Verdict::pass : Verdict::fail;
    else
      mc.verdict = z > 5.0 ? Verdict::pass : Verdict::fail;
    out.push_back(std::move(mc));
  }
  return out;
}

inline std::vector<MomentCheck> check_moment_vanishing(const SimConfig& cfg, int rule) {
  SimConfig c = cfg;
  c.t = 1.0;
  QuadratureConfig q;
  q.rel_tol = 1e-9;
  q.abs_tol = 1e-13;
  return check_moment_vanishing(c, rule, simulate_paths(c), HeatKernel(cfg.spec, q));
}

/// E_{g ~ p(t,0,.)}[p(t, 0, g)] against p(2t, 0, 0): Chapman-Kolmogorov at the origin.
struct SemigroupCheck {
  McEstimate estimate;
  Estimate reference;
  double discrepancy_in_sigma() const {
    return std::abs(estimate.estimate - reference.value) / std::hypot(estimate.stderr_, reference.error);
  }
};

inline SemigroupCheck semigroup_check(const SimConfig& cfg, const SampleSet& samples, const HeatKernel& kernel) {
  std::vector<double> vals(samples.size());
  detail::for_blocks(samples.size(), cfg.threads, [&](std::size_t p0, std::size_t p1) {
    for (std::size_t p = p0; p < p1; ++p) vals[p] = kernel.at(cfg.t, samples.point(p)).value;
  });
  Estimate e = sample_mean(vals);
  return {{"E[p(t,0,g)]", e.value, e.error, samples.size(), cfg.n_steps, cfg.seed}, kernel.diagonal(2.0 * cfg.t)};
}

}  // namespace qcheat
