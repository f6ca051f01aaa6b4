#pragma once

// Small-time heat-trace fit tr exp(-t Delta) ~ t^{-Q/2} (A + B t) from an
// eigenvalue list or from sampled trace values.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "qcheat/error.hpp"
#include "qcheat/invariants.hpp"

namespace qcheat {

struct SpectrumFile {
  std::vector<std::pair<double, double>> eigenvalues;  // (lambda, multiplicity)
  std::string metadata;

  void validate() const {
    if (eigenvalues.empty()) throw InputError("spectrum is empty");
    double prev = 0.0;
    for (const auto& [lam, mult] : eigenvalues) {
      if (!(lam >= 0) || !std::isfinite(lam)) throw InputError("eigenvalues must be finite and nonnegative");
      if (lam < prev) throw InputError("eigenvalues must be nondecreasing");
      if (!(mult > 0) || !std::isfinite(mult)) throw InputError("multiplicities must be positive");
      prev = lam;
    }
  }

  double trace(double t) const {
    double s = 0.0;
    for (const auto& [lam, mult] : eigenvalues) s += mult * std::exp(-lam * t);
    return s;
  }

  /// Size of the last retained term relative to the trace: a proxy for the
  /// truncation error of the eigenvalue sum at time t.
  double truncation_indicator(double t) const {
    const auto& [lam, mult] = eigenvalues.back();
    return mult * std::exp(-lam * t) / trace(t);
  }
};

/// "eigenvalue multiplicity" per line; '#' starts a comment; a multiplicity
/// may be omitted (defaults to 1). Lines "# label: ..." set the metadata.
inline SpectrumFile parse_spectrum(std::istream& in) {
  SpectrumFile f;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) {
      std::string comment = line.substr(hash + 1);
      auto lbl = comment.find("label:");
      if (lbl != std::string::npos) {
        f.metadata = comment.substr(lbl + 6);
        f.metadata.erase(0, f.metadata.find_first_not_of(' '));
      }
      line.erase(hash);
    }
    std::istringstream ls(line);
    double lam = 0.0, mult = 1.0;
    if (!(ls >> lam)) {
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      throw InputError("cannot parse eigenvalue", lineno);
    }
    if (!(ls >> mult)) {
      if (!ls.eof()) throw InputError("cannot parse multiplicity", lineno);
      mult = 1.0;
    }
    std::string extra;
    if (ls >> extra) throw InputError("unexpected trailing field '" + extra + "'", lineno);
    if (!(lam >= 0) || !std::isfinite(lam)) throw InputError("negative or non-finite eigenvalue", lineno);
    if (!(mult > 0)) throw InputError("nonpositive multiplicity", lineno);
    if (!f.eigenvalues.empty() && lam < f.eigenvalues.back().first)
      throw InputError("eigenvalues must be nondecreasing", lineno);
    f.eigenvalues.emplace_back(lam, mult);
  }
  f.validate();
  return f;
}

inline SpectrumFile load_spectrum(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open spectrum file '" + path + "'");
  return parse_spectrum(in);
}

/// Sampled heat trace: "t value" per line, t strictly increasing.
struct TraceSamples {
  std::vector<double> t;
  std::vector<double> trace;
  std::string metadata;
};

inline TraceSamples parse_trace(std::istream& in) {
  TraceSamples s;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) {
      auto lbl = line.find("label:", hash);
      if (lbl != std::string::npos) {
        s.metadata = line.substr(lbl + 6);
        s.metadata.erase(0, s.metadata.find_first_not_of(' '));
      }
      line.erase(hash);
    }
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream ls(line);
    double t = 0.0, v = 0.0;
    if (!(ls >> t >> v)) throw InputError("expected 't trace'", lineno);
    std::string extra;
    if (ls >> extra) throw InputError("unexpected trailing field '" + extra + "'", lineno);
    if (!(t > 0) || !std::isfinite(t)) throw InputError("time must be positive", lineno);
    if (!(v > 0) || !std::isfinite(v)) throw InputError("trace must be positive", lineno);
    if (!s.t.empty() && t <= s.t.back()) throw InputError("times must be increasing", lineno);
    s.t.push_back(t);
    s.trace.push_back(v);
  }
  if (s.t.empty()) throw InputError("trace file is empty");
  return s;
}

inline TraceSamples load_trace(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open trace file '" + path + "'");
  return parse_trace(in);
}

struct SpectralFit {
  double Q = 0.0;
  double A = 0.0;
  double B = 0.0;
  double condition = 0.0;     // of the weighted Jacobian at the solution
  double residual_rms = 0.0;  // weighted, in log-trace units
  double truncation = 0.0;    // worst truncation indicator over the grid (0 for trace input)
  int iterations = 0;
};

inline void to_json(nlohmann::json& j, const SpectralFit& f) {
  j = {{"Q", f.Q}, {"A", f.A}, {"B", f.B}, {"condition", f.condition}, {"residual_rms", f.residual_rms},
       {"truncation", f.truncation}, {"iterations", f.iterations}};
}

struct SpectralFitOptions {
  double max_condition = 1e12;
  double max_truncation = 1e-6;
  int max_iterations = 200;
};

/// Fit log tr = -(Q/2) log t + log A + log(1 + (B/A) t) with weights 1/t.
inline SpectralFit fit_heat_trace(const std::vector<double>& t, const std::vector<double>& trace,
                                  const SpectralFitOptions& opt = {}) {
  const std::size_t N = t.size();
  if (N != trace.size()) throw InputError("trace samples and time grid differ in length");
  if (N < 3) throw InputError("at least three grid points are needed to fit (Q, A, B)");
  for (std::size_t k = 0; k < N; ++k) {
    if (!(t[k] > 0) || !std::isfinite(t[k])) throw InputError("time grid must be positive");
    if (!(trace[k] > 0) || !std::isfinite(trace[k])) throw InputError("trace samples must be positive");
  }
  Eigen::VectorXd y(N), lt(N), tt(N), w(N);
  for (std::size_t k = 0; k < N; ++k) {
    y(k) = std::log(trace[k]);
    lt(k) = std::log(t[k]);
    tt(k) = t[k];
    w(k) = std::sqrt(1.0 / t[k]);  // square root of the 1/t weight
  }
  // Linearized start: log tr ~ -(Q/2) log t + log A + c t.
  Eigen::MatrixXd X(N, 3);
  X.col(0) = -0.5 * lt;
  X.col(1).setOnes();
  X.col(2) = tt;
  Eigen::Vector3d p = (w.asDiagonal() * X).colPivHouseholderQr().solve(w.asDiagonal() * y);  // (Q, log A, c)

  auto residual = [&](const Eigen::Vector3d& q) {
    Eigen::VectorXd r(N);
    for (std::size_t k = 0; k < N; ++k) {
      double arg = 1.0 + q(2) * tt(k);
      double model = arg > 0 ? -0.5 * q(0) * lt(k) + q(1) + std::log(arg) : 1e300;
      r(k) = w(k) * (model - y(k));
    }
    return r;
  };
  auto jacobian = [&](const Eigen::Vector3d& q) {
    Eigen::MatrixXd J(N, 3);
    for (std::size_t k = 0; k < N; ++k) {
      J(k, 0) = w(k) * (-0.5 * lt(k));
      J(k, 1) = w(k);
      J(k, 2) = w(k) * tt(k) / (1.0 + q(2) * tt(k));
    }
    return J;
  };
  double lambda = 1e-6;
  Eigen::VectorXd r = residual(p);
  double cost = r.squaredNorm();
  int it = 0;
  bool done = false;
  for (; it < opt.max_iterations && !done; ++it) {
    Eigen::MatrixXd J = jacobian(p);
    Eigen::Matrix3d H = J.transpose() * J;
    Eigen::Vector3d g = J.transpose() * r;
    if (g.norm() < 1e-15 * (1.0 + cost)) break;
    bool improved = false;
    for (int tries = 0; tries < 30; ++tries) {
      Eigen::Matrix3d Hd = H;
      for (int i = 0; i < 3; ++i) Hd(i, i) *= 1.0 + lambda;
      Eigen::Vector3d step = Hd.ldlt().solve(-g);
      Eigen::Vector3d cand = p + step;
      Eigen::VectorXd rc = residual(cand);
      double cc = rc.squaredNorm();
      if (cc < cost) {
        double rel = (cost - cc) / std::max(cost, 1e-300);
        p = cand;
        r = rc;
        cost = cc;
        lambda = std::max(lambda / 10.0, 1e-12);
        improved = true;
        done = step.norm() < 1e-14 * (1.0 + p.norm()) || rel < 1e-16;
        break;
      }
      lambda *= 10.0;
    }
    if (!improved) break;
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(jacobian(p));
  const auto& sv = svd.singularValues();
  SpectralFit fit;
  fit.Q = p(0);
  fit.A = std::exp(p(1));
  fit.B = fit.A * p(2);
  fit.condition = sv(sv.size() - 1) > 0 ? sv(0) / sv(sv.size() - 1) : INFINITY;
  fit.residual_rms = std::sqrt(cost / static_cast<double>(N));
  fit.iterations = it;
  if (!(fit.condition <= opt.max_condition))
    throw NumericFailure("heat-trace fit is ill-conditioned (condition number " + std::to_string(fit.condition) + ")",
                         fit.Q, fit.condition);
  return fit;
}

inline SpectralFit spectral_extract(const SpectrumFile& spec, const std::vector<double>& t_grid,
                                    const SpectralFitOptions& opt = {}) {
  spec.validate();
  std::vector<double> tr;
  double worst = 0.0;
  for (double t : t_grid) {
    if (!(t > 0)) throw InputError("time grid must be positive");
    tr.push_back(spec.trace(t));
    worst = std::max(worst, spec.truncation_indicator(t));
  }
  if (worst > opt.max_truncation)
    throw InputError("spectrum too short for the time grid: last eigenvalue still contributes " +
                     std::to_string(worst) + " of the trace");
  SpectralFit fit = fit_heat_trace(t_grid, tr, opt);
  fit.truncation = worst;
  return fit;
}

/// Geometric quantities implied by a fit on the level-n model:
/// dim = Q - 3, Vol = A / c0, kappa = B / (C_n Vol).
struct SpectralGeometry {
  double dimension = 0.0;
  double volume = 0.0;
  double kappa = 0.0;
};

inline SpectralGeometry spectral_geometry(const SpectralFit& fit, unsigned n, const QuadratureConfig& cfg = {}) {
  double c0 = compute_c0(n, cfg).value;
  double cn = compute_Cn(n, cfg).value;
  SpectralGeometry g;
  g.dimension = fit.Q - 3.0;
  g.volume = fit.A / c0;
  g.kappa = fit.B / (cn * g.volume);
  return g;
}

inline std::vector<double> default_time_grid() {
  std::vector<double> g;
  for (int k = 0; k < 16; ++k) g.push_back(0.01 * std::pow(10.0, k / 15.0));
  return g;
}

}  // namespace qcheat
