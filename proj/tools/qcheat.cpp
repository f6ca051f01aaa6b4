// qcheat: command-line front end.
//
// Reports go to stdout (or --out) as JSON, bulk tables as CSV; diagnostics go
// to stderr. Exit codes: 0 ok, 2 usage or input error, 3 numeric failure,
// 4 invariant violation.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "qcheat/qcheat.hpp"

using namespace qcheat;
using nlohmann::json;

namespace {

enum Exit { kOk = 0, kUsage = 2, kNumeric = 3, kInvariant = 4 };

struct Options {
  unsigned n = 1;
  double tol = 0.0;  // 0: library defaults
  std::vector<double> t;
  std::uint64_t seed = 0;
  std::size_t paths = 100000;
  std::size_t steps = 1000;
  std::string out;
  std::string format;
  double kappa = 0.0;
  std::string input;
  bool trace_input = false;
  bool no_cross_check = false;
  bool torsion_only = false;
  std::string estimator = "moments";
  int rule = 0;
  std::string test_function = "kernel";
};

/// Output sink: --out file or stdout.
class Sink {
 public:
  explicit Sink(const std::string& path) {
    if (!path.empty()) {
      file_ = std::make_unique<std::ofstream>(path);
      if (!*file_) throw InputError("cannot open output file '" + path + "'");
    }
  }
  std::ostream& os() { return file_ ? *file_ : std::cout; }

 private:
  std::unique_ptr<std::ofstream> file_;
};

QuadratureConfig quadrature(const Options& o) {
  QuadratureConfig q;
  if (o.tol > 0) q.abs_tol = o.tol;
  return q;
}

/// Error bound check for --tol: the reported error must not exceed it.
void require_tol(const Options& o, const Estimate& e, const std::string& what) {
  if (o.tol > 0 && !(e.error <= o.tol))
    throw NumericFailure(what + " error bound " + std::to_string(e.error) + " exceeds --tol", e.value, e.error);
}

json header(const std::string& cmd, const json& config) {
  return {{"tool", "qcheat"}, {"version", kVersion}, {"subcommand", cmd}, {"config", config}};
}

void write_json(const Options& o, const json& j) {
  Sink s(o.out);
  s.os() << j.dump(2) << "\n";
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// ---- subcommands -----------------------------------------------------------

int cmd_c0(const Options& o) {
  const QuadratureConfig q = quadrature(o);
  Estimate c = compute_c0(o.n, q);
  require_tol(o, c, "c0");
  json cfg = {{"n", o.n}, {"tol", o.tol}, {"quadrature", q}};
  json j = header("c0", cfg);
  j["c0"] = c;
  if (!o.no_cross_check) {
    Estimate p = HeatKernel(make_quaternionic_spec(o.n), q).diagonal(1.0);
    j["cross_check"] = {{"route", "p(1, 0, 0) from the radial kernel integral"},
                        {"value", p.value},
                        {"error", p.error},
                        {"agrees", std::abs(p.value - c.value) <= p.error + c.error}};
  }
  if (o.format == "csv") {
    Sink s(o.out);
    s.os() << "# " << header("c0", cfg).dump() << "\nn,c0,error\n" << o.n << "," << num(c.value) << ","
           << num(c.error) << "\n";
    return kOk;
  }
  write_json(o, j);
  return kOk;
}

int cmd_cn(const Options& o) {
  const QuadratureConfig q = quadrature(o);
  Estimate c = compute_Cn(o.n, q);
  require_tol(o, c, "Cn");
  json cfg = {{"n", o.n}, {"tol", o.tol}, {"quadrature", q}};
  if (o.format == "csv") {
    Sink s(o.out);
    s.os() << "# " << header("cn", cfg).dump() << "\nn,Cn,error\n" << o.n << "," << num(c.value) << ","
           << num(c.error) << "\n";
    return kOk;
  }
  json j = header("cn", cfg);
  j["Cn"] = c;
  j["sphere_c1"] = sphere_c1(o.n, q);
  j["sphere_curvature"] = sphere_curvature(o.n);
  write_json(o, j);
  return kOk;
}

int cmd_report(const Options& o) {
  const QuadratureConfig q = quadrature(o);
  InvariantReport r = asymptotic_report(o.n, o.kappa, q, !o.no_cross_check);
  json j = header("report", {{"n", o.n}, {"kappa", o.kappa}, {"tol", o.tol}, {"quadrature", q}});
  j["report"] = r;
  write_json(o, j);
  return kOk;
}

int cmd_spec(const Options& o) {
  json j = header("spec", {{"n", o.n}});
  j["spec"] = to_json(make_quaternionic_spec(o.n));
  write_json(o, j);
  return kOk;
}

/// Batch rows: "t x_1..x_m z_1..z_r [d_1..d_{m+r}]".
int cmd_kernel(const Options& o) {
  const GroupSpec spec = make_quaternionic_spec(o.n);
  const std::size_t m = spec.horizontal_dim(), r = spec.vertical_dim(), N = m + r;
  const QuadratureConfig q = quadrature(o);
  HeatKernel kernel(spec, q);
  std::ifstream in(o.input);
  if (!in) throw InputError("cannot open batch file '" + o.input + "'");
  json cfg = {{"n", o.n}, {"tol", o.tol}, {"quadrature", q}, {"input", o.input}};
  struct Row {
    int line;
    double t;
    Estimate e;
    std::string status;
  };
  std::vector<Row> rows;
  int worst = kOk;
  std::string text;
  int lineno = 0;
  while (std::getline(in, text)) {
    ++lineno;
    if (auto h = text.find('#'); h != std::string::npos) text.erase(h);
    if (text.find_first_not_of(" \t\r,") == std::string::npos) continue;
    for (char& ch : text)
      if (ch == ',') ch = ' ';
    std::istringstream ls(text);
    std::vector<double> v;
    std::string tok;
    Row row{lineno, 0.0, {}, "ok"};
    try {
      while (ls >> tok) {
        std::size_t pos = 0;
        double d = 0;
        try {
          d = std::stod(tok, &pos);
        } catch (const std::exception&) {
          pos = 0;
        }
        if (pos != tok.size()) throw InputError("cannot parse '" + tok + "'", lineno);
        v.push_back(d);
      }
      if (v.size() != 1 + N && v.size() != 1 + 2 * N)
        throw InputError("expected " + std::to_string(1 + N) + " or " + std::to_string(1 + 2 * N) + " fields, got " +
                             std::to_string(v.size()),
                         lineno);
      row.t = v[0];
      GroupPoint<double> h{{v.begin() + 1, v.begin() + 1 + m}, {v.begin() + 1 + m, v.begin() + 1 + N}};
      MultiIndex d;
      for (std::size_t k = 1 + N; k < v.size(); ++k) {
        if (v[k] < 0 || v[k] != std::floor(v[k])) throw InputError("derivative orders must be natural numbers", lineno);
        d.push_back(static_cast<unsigned>(v[k]));
      }
      try {
        row.e = kernel.at(row.t, h, d);
      } catch (const InputError& e) {
        throw InputError(e.what(), lineno);
      }
    } catch (const InputError& e) {
      row.status = e.what();
      worst = std::max(worst, static_cast<int>(kUsage));
    } catch (const NumericFailure& e) {
      row.status = e.what();
      row.e = {e.best_estimate(), e.best_error()};
      worst = std::max(worst, static_cast<int>(kNumeric));
    }
    if (row.status != "ok") std::cerr << "qcheat kernel: " << row.status << "\n";
    rows.push_back(std::move(row));
  }
  Sink s(o.out);
  if (o.format == "json") {
    json j = header("kernel", cfg);
    j["rows"] = json::array();
    for (const auto& row : rows)
      j["rows"].push_back({{"line", row.line}, {"t", row.t}, {"value", row.e.value}, {"error", row.e.error},
                           {"status", row.status}});
    s.os() << j.dump(2) << "\n";
  } else {
    s.os() << "# " << header("kernel", cfg).dump() << "\nline,t,value,error,status\n";
    for (const auto& row : rows) {
      std::string st = row.status;
      for (char& ch : st)
        if (ch == ',' || ch == '"') ch = ';';
      s.os() << row.line << "," << num(row.t) << "," << num(row.e.value) << "," << num(row.e.error) << "," << st
             << "\n";
    }
  }
  return worst;
}

int cmd_reduce(const Options& o) {
  const GroupSpec spec = make_quaternionic_spec(o.n);
  TensorSymbols ts(o.n, true, !o.torsion_only);
  C1Reduction red = reduce_c1(spec, ts);
  json cfg = {{"n", o.n}, {"torsion_only", o.torsion_only}};
  Sink s(o.out);
  if (o.format == "json") {
    json j = header("reduce-c1", cfg);
    j["classes"] = json::array();
    for (std::size_t k = 0; k < red.classes.size(); ++k)
      j["classes"].push_back({{"moment", red.classes[k].label()},
                              {"rule", red.classes[k].rule()},
                              {"kappa_coefficient", to_string(red.kappa_coefficients[k])}});
    j["coordinate_terms"] = red.coordinate_terms;
    j["log"] = red.log;
    j["result"] = red.final_line();
    s.os() << j.dump(2) << "\n";
  } else {
    s.os() << "# " << header("reduce-c1", cfg).dump() << "\n" << red.log;
  }
  return kOk;
}

/// Rational when every entry is an integer or a "p/q" string, double otherwise.
struct FrameFile {
  bool exact = true;
  AdaptedFrameData<Rational> q;
  AdaptedFrameData<double> d;
};

FrameFile load_frame(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open frame file '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw InputError(std::string("frame file is not valid JSON: ") + e.what());
  }
  FrameFile f;
  try {
    const std::size_t m = j.at("m").get<std::size_t>(), k = j.at("k").get<std::size_t>();
    const auto& b = j.at("b");
    for (const auto& bi : b)
      for (const auto& row : bi)
        for (const auto& v : row)
          if (v.is_number_float()) f.exact = false;
    f.q.m = f.d.m = m;
    f.q.k = f.d.k = k;
    if (!b.is_array() || b.size() != k) throw InputError("'b' must hold k matrices");
    for (const auto& bi : b) {
      if (bi.size() != m) throw InputError("bracket matrices must be m x m");
      Matrix<Rational> mq(m, m);
      Matrix<double> md(m, m);
      for (std::size_t r = 0; r < m; ++r) {
        if (bi[r].size() != m) throw InputError("bracket matrices must be m x m");
        for (std::size_t c = 0; c < m; ++c) {
          const auto& v = bi[r][c];
          if (v.is_string()) {
            mq(r, c) = parse_rational(v.get<std::string>());
            md(r, c) = to_double(mq(r, c));
          } else if (v.is_number_integer()) {
            mq(r, c) = Rational(v.get<long long>());
            md(r, c) = static_cast<double>(v.get<long long>());
          } else if (v.is_number()) {
            md(r, c) = v.get<double>();
          } else {
            throw InputError("bracket entries must be numbers or \"p/q\" strings");
          }
        }
      }
      f.q.b.push_back(std::move(mq));
      f.d.b.push_back(std::move(md));
    }
    if (j.contains("c")) {
      StructureFunctions<Rational> cq;
      StructureFunctions<double> cd;
      for (const auto& ca : j.at("c")) {
        cq.emplace_back();
        cd.emplace_back();
        for (const auto& cab : ca) {
          cq.back().emplace_back();
          cd.back().emplace_back();
          for (const auto& v : cab) {
            if (v.is_string()) {
              cq.back().back().push_back(parse_rational(v.get<std::string>()));
            } else if (v.is_number_integer()) {
              cq.back().back().push_back(Rational(v.get<long long>()));
            } else {
              f.exact = false;
              cq.back().back().push_back(Rational(0));
            }
            cd.back().back().push_back(v.is_string() ? to_double(cq.back().back().back()) : v.get<double>());
          }
        }
      }
      f.q.c = std::move(cq);
      f.d.c = std::move(cd);
    }
  } catch (const json::exception& e) {
    throw InputError(std::string("malformed frame file: ") + e.what());
  }
  return f;
}

int cmd_popp(const Options& o) {
  FrameFile f = load_frame(o.input);
  json j = header("popp", {{"input", o.input}, {"exact", f.exact}});
  auto fill = [&](const auto& data, auto&& show) {
    auto p = popp_density(data);
    json B = json::array();
    for (std::size_t i = 0; i < p.B.rows(); ++i) {
      json row = json::array();
      for (std::size_t k = 0; k < p.B.cols(); ++k) row.push_back(show(p.B(i, k)));
      B.push_back(row);
    }
    j["B"] = B;
    j["det_B"] = show(p.det);
    j["density"] = p.value;
    if (data.c) {
      json dv = json::array();
      for (const auto& v : divergence_terms(data)) dv.push_back(show(v));
      j["divergence_terms"] = dv;
    }
  };
  if (f.exact)
    fill(f.q, [](const Rational& v) { return to_string(v); });
  else
    fill(f.d, [](double v) { return v; });
  write_json(o, j);
  return kOk;
}

int cmd_mc(const Options& o) {
  SimConfig c;
  c.spec = make_quaternionic_spec(o.n);
  c.t = o.t.empty() ? 1.0 : o.t.front();
  if (o.t.size() > 1) throw InputError("mc takes a single --t");
  c.n_paths = o.paths;
  c.n_steps = o.steps;
  c.seed = o.seed;
  if (o.estimator == "moments")
    c.estimator = Estimator::moments;
  else if (o.estimator == "convolution-moment")
    c.estimator = Estimator::convolution_moment;
  else
    c.estimator = Estimator::expectation;
  json cfg = c;
  if (c.estimator == Estimator::convolution_moment) cfg["rule"] = o.rule;
  if (c.estimator == Estimator::expectation) cfg["test_function"] = o.test_function;

  std::vector<McEstimate> rows;
  int status = kOk;
  const SampleSet samples = simulate_paths(c);
  switch (c.estimator) {
    case Estimator::moments:
      rows = diffusion_moments(c, samples);
      break;
    case Estimator::convolution_moment: {
      if (std::abs(c.t - 1.0) > 0) throw InputError("convolution moments are defined at t = 1");
      QuadratureConfig q;
      q.rel_tol = 1e-9;
      q.abs_tol = 1e-13;
      HeatKernel kernel(c.spec, q);
      std::vector<int> rules = o.rule ? std::vector<int>{o.rule} : std::vector<int>{1, 2, 3, 4};
      for (int rule : rules)
        for (const auto& mc : check_moment_vanishing(c, rule, samples, kernel)) {
          static const char* names[] = {"pass", "fail", "inconclusive"};
          const double z = std::abs(mc.estimate.estimate) / mc.estimate.stderr_;
          std::cerr << mc.moment.name << (mc.moment.expect_zero ? " (expect 0)" : " (expect nonzero)")
                    << ": |est|/stderr = " << z << " -> " << names[static_cast<int>(mc.verdict)] << "\n";
          if (mc.verdict == Verdict::fail) status = kNumeric;
          rows.push_back(mc.estimate);
        }
      break;
    }
    case Estimator::expectation: {
      if (o.test_function != "kernel") throw InputError("unknown test function '" + o.test_function + "'");
      SemigroupCheck sc = semigroup_check(c, samples, HeatKernel(c.spec));
      rows.push_back(sc.estimate);
      rows.push_back({"p(2t,0,0)", sc.reference.value, sc.reference.error, 0, 0, c.seed});
      std::cerr << "semigroup discrepancy: " << sc.discrepancy_in_sigma() << " sigma\n";
      if (sc.discrepancy_in_sigma() >= 3.0) status = kNumeric;
      break;
    }
  }
  Sink s(o.out);
  if (o.format == "json") {
    json j = header("mc", cfg);
    j["rows"] = json::array();
    for (const auto& e : rows)
      j["rows"].push_back({{"quantity", e.quantity}, {"estimate", e.estimate}, {"stderr", e.stderr_},
                           {"n_paths", e.n_paths}, {"n_steps", e.n_steps}, {"seed", e.seed}});
    s.os() << j.dump(2) << "\n";
  } else {
    s.os() << "# " << header("mc", cfg).dump() << "\n";
    write_csv(s.os(), rows);
  }
  return status;
}

int cmd_spectrum(const Options& o) {
  SpectralFit fit;
  json cfg = {{"input", o.input}, {"trace", o.trace_input}};
  std::string label;
  if (o.trace_input) {
    if (!o.t.empty()) throw InputError("--t cannot be combined with --trace (the file carries its own grid)");
    TraceSamples s = load_trace(o.input);
    label = s.metadata;
    cfg["t"] = s.t;
    fit = fit_heat_trace(s.t, s.trace);
  } else {
    SpectrumFile spec = load_spectrum(o.input);
    label = spec.metadata;
    std::vector<double> grid = o.t.empty() ? default_time_grid() : o.t;
    cfg["t"] = grid;
    fit = spectral_extract(spec, grid);
  }
  if (o.n) cfg["n"] = o.n;
  json j = header("spectrum", cfg);
  j["label"] = label;
  j["fit"] = fit;
  if (o.n) {
    SpectralGeometry g = spectral_geometry(fit, o.n);
    j["geometry"] = {{"dimension", g.dimension}, {"volume", g.volume}, {"kappa", g.kappa}};
  }
  write_json(o, j);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Heat invariants of quaternionic contact manifolds: kernel, invariants, symbolic c1, Monte Carlo"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);
  Options o;

  auto add_n = [&](CLI::App* s, bool required = false) {
    auto* opt = s->add_option("--n", o.n, "quaternionic level n >= 1")->check(CLI::PositiveNumber);
    if (required) opt->required();
  };
  auto add_tol = [&](CLI::App* s) {
    s->add_option("--tol", o.tol, "absolute error bound on the reported value")->check(CLI::PositiveNumber);
  };
  auto add_out = [&](CLI::App* s, const std::vector<std::string>& formats) {
    s->add_option("--out", o.out, "output file (default stdout)");
    s->add_option("--format", o.format, "output format")->check(CLI::IsMember(formats));
  };

  auto* c0 = app.add_subcommand("c0", "first heat invariant c0(n)");
  add_n(c0, true), add_tol(c0), add_out(c0, {"json", "csv"});
  c0->add_flag("--no-cross-check", o.no_cross_check, "skip the kernel-diagonal comparison");

  auto* cn = app.add_subcommand("cn", "universal constant C_n of c1 = C_n kappa");
  add_n(cn, true), add_tol(cn), add_out(cn, {"json", "csv"});

  auto* report = app.add_subcommand("report", "c0, C_n and c1 for a given qc scalar curvature");
  add_n(report, true), add_tol(report), add_out(report, {"json"});
  report->add_option("--kappa", o.kappa, "qc scalar curvature");
  report->add_flag("--no-cross-check", o.no_cross_check, "skip the kernel-diagonal comparison");

  auto* spec = app.add_subcommand("spec", "print the quaternionic Heisenberg spec");
  add_n(spec, true), add_out(spec, {"json"});

  auto* kernel = app.add_subcommand("kernel", "heat kernel values for a batch file");
  add_n(kernel), add_tol(kernel), add_out(kernel, {"csv", "json"});
  kernel->add_option("batch", o.input, "rows 't x.. z.. [derivative orders]'")->required();

  auto* reduce = app.add_subcommand("reduce-c1", "symbolic reduction of the c1 integrand");
  add_n(reduce, true), add_out(reduce, {"text", "json"});
  reduce->add_flag("--torsion-only", o.torsion_only, "drop curvature symbols");

  auto* popp = app.add_subcommand("popp", "Popp density from adapted-frame bracket data");
  add_out(popp, {"json"});
  popp->add_option("frame", o.input, "JSON {m, k, b[, c]}")->required();

  auto* mc = app.add_subcommand("mc", "Monte Carlo validation of the diffusion");
  add_n(mc), add_out(mc, {"csv", "json"});
  mc->add_option("--t", o.t, "time")->check(CLI::PositiveNumber);
  mc->add_option("--seed", o.seed, "64-bit seed")->required();
  mc->add_option("--paths", o.paths, "number of paths")->check(CLI::Range(std::size_t{2}, std::size_t{1} << 40));
  mc->add_option("--steps", o.steps, "Euler steps per path")->check(CLI::PositiveNumber);
  mc->add_option("--estimator", o.estimator, "moments | convolution-moment | expectation")
      ->check(CLI::IsMember({"moments", "convolution-moment", "expectation"}));
  mc->add_option("--rule", o.rule, "moment rule 1-4 (default: all)")->check(CLI::Range(1, 4));
  mc->add_option("--test-function", o.test_function, "expectation test function (kernel)");

  auto* spectrum = app.add_subcommand("spectrum", "fit (Q, A, B) to a heat trace");
  add_out(spectrum, {"json"});
  spectrum->add_option("file", o.input, "eigenvalue file, or 't trace' pairs with --trace")->required();
  spectrum->add_flag("--trace", o.trace_input, "input holds sampled trace values");
  spectrum->add_option("--t", o.t, "time grid (comma separated)")->delimiter(',')->check(CLI::PositiveNumber);
  spectrum->add_option("--n", o.n, "level for dimension/volume/kappa read-out")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kUsage;
  }
  if (spectrum->parsed() && spectrum->count("--n") == 0) o.n = 0;

  try {
    if (c0->parsed()) return cmd_c0(o);
    if (cn->parsed()) return cmd_cn(o);
    if (report->parsed()) return cmd_report(o);
    if (spec->parsed()) return cmd_spec(o);
    if (kernel->parsed()) return cmd_kernel(o);
    if (reduce->parsed()) return cmd_reduce(o);
    if (popp->parsed()) return cmd_popp(o);
    if (mc->parsed()) return cmd_mc(o);
    if (spectrum->parsed()) return cmd_spectrum(o);
  } catch (const InputError& e) {
    std::cerr << "qcheat: " << e.what() << "\n";
    return kUsage;
  } catch (const NumericFailure& e) {
    std::cerr << "qcheat: " << e.what() << " (best estimate " << e.best_estimate() << " +- " << e.best_error()
              << ")\n";
    return kNumeric;
  } catch (const InvariantViolation& e) {
    std::cerr << "qcheat: invariant violated: " << e.what() << "\n";
    return kInvariant;
  } catch (const std::exception& e) {
    std::cerr << "qcheat: " << e.what() << "\n";
    return 1;
  }
  return kUsage;
}
