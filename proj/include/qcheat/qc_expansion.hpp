#pragma once

// Symbolic expansion of the special frame in qc normal coordinates at a point,
// the perturbation operator P2 of the rescaled sublaplacian, and the moment
// reduction of the second heat invariant to a multiple of kappa.
//
// Frame indices: a < m horizontal (X_a), a = m + i vertical (V_i).
// Coordinates of the graded space use the same layout (x_a, z_i).

#include <algorithm>
#include <cstddef>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "qcheat/error.hpp"
#include "qcheat/graded.hpp"
#include "qcheat/group.hpp"
#include "qcheat/tensor_symbols.hpp"

namespace qcheat {

using SymPoly = Poly<SymExpr>;
using SymField = VectorField<SymExpr>;
using SymForm = Form<SymExpr>;

/// Low-order homogeneous terms of the special coframe and connection forms.
struct CoframeExpansion {
  GradedSpace space;
  std::vector<SymForm> theta1, theta2, theta3;  // per horizontal index
  std::vector<SymForm> eta2, eta3, eta4;        // per vertical index
  std::map<std::pair<std::size_t, std::size_t>, SymForm> omega2;  // nonzero omega^{(2)}_{ab}

  SymForm omega(std::size_t a, std::size_t b) const {
    auto it = omega2.find({a, b});
    return it == omega2.end() ? SymForm(space) : it->second;
  }

  /// theta_a then eta_i, known through orders 3 and 4.
  std::vector<CoframeSeries<SymExpr>> series() const {
    std::vector<CoframeSeries<SymExpr>> out;
    for (std::size_t a = 0; a < theta1.size(); ++a)
      out.push_back({{{1, theta1[a]}, {2, theta2[a]}, {3, theta3[a]}}, 3});
    for (std::size_t i = 0; i < eta2.size(); ++i) out.push_back({{{2, eta2[i]}, {3, eta3[i]}, {4, eta4[i]}}, 4});
    return out;
  }
};

namespace detail {
inline GradedSpace qc_space(const TensorSymbols& ts) { return {ts.horizontal_dim(), 3}; }
inline SymPoly var(const GradedSpace& sp, std::size_t k, const SymExpr& c = SymExpr(1)) {
  return SymPoly::variable(sp, k, c);
}
inline SymExpr J(const GroupSpec& spec, std::size_t i, std::size_t a, std::size_t b) {
  return SymExpr(spec.structure(i)(a, b));
}
}  // namespace detail

/// eta^{(2)}_i = dz_i/2 - I^i_{ab} x_a dx_b,  eta^{(3)} = 0,
/// eta^{(4)}_i = (z_j omega_{j'i'} + T^{i'}_{j'k'} z_j eta^{(2)}_k - 2 I^i_{ab} x_a theta^{(3)}_b)/4,
/// theta^{(1)}_a = dx_a, theta^{(2)} = 0,
/// theta^{(3)}_a = (x_b omega_{ba} - T^a_{i'g} x_g eta^{(2)}_i + T^a_{i'b} z_i dx_b)/3,
/// omega^{(2)}_{ab} = R^b_{gda} x_g dx_d / 2 (a, b of the same type).
inline CoframeExpansion build_coframe(const GroupSpec& spec, const TensorSymbols& ts) {
  if (spec.horizontal_dim() != ts.horizontal_dim() || spec.vertical_dim() != 3)
    throw InputError("spec and tensor symbols disagree on dimensions");
  const std::size_t m = ts.horizontal_dim();
  const GradedSpace sp = detail::qc_space(ts);
  CoframeExpansion ce;
  ce.space = sp;
  auto add_omega = [&](std::size_t a, std::size_t b) {
    SymForm w(sp);
    for (std::size_t g = 0; g < m; ++g)
      for (std::size_t d = 0; d < m; ++d) {
        SymExpr r = ts.R(b, g, d, a);
        if (!r.is_zero()) w[d] += detail::var(sp, g, Rational(1, 2) * r);
      }
    if (!w.is_zero()) ce.omega2.emplace(std::make_pair(a, b), std::move(w));
  };
  for (std::size_t a = 0; a < m; ++a)
    for (std::size_t b = 0; b < m; ++b) add_omega(a, b);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) add_omega(m + i, m + j);

  for (std::size_t i = 0; i < 3; ++i) {
    SymForm e = SymForm::differential(sp, m + i, Rational(1, 2));
    for (std::size_t a = 0; a < m; ++a)
      for (std::size_t b = 0; b < m; ++b)
        if (spec.structure(i)(a, b) != 0) e[b] -= detail::var(sp, a, detail::J(spec, i, a, b));
    ce.eta2.push_back(std::move(e));
    ce.eta3.emplace_back(sp);
  }
  for (std::size_t a = 0; a < m; ++a) {
    ce.theta1.push_back(SymForm::differential(sp, a));
    ce.theta2.emplace_back(sp);
    SymForm t(sp);
    for (std::size_t b = 0; b < m; ++b) {
      auto w = ce.omega2.find({b, a});
      if (w != ce.omega2.end()) t = t + detail::var(sp, b) * w->second;
    }
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t g = 0; g < m; ++g) {
        SymExpr tt = ts.T(a, m + i, g);
        if (tt.is_zero()) continue;
        t = t - detail::var(sp, g, tt) * ce.eta2[i];
        t[g] += detail::var(sp, m + i, tt);
      }
    ce.theta3.push_back(Rational(1, 3) * t);
  }
  for (std::size_t i = 0; i < 3; ++i) {
    SymForm e(sp);
    for (std::size_t j = 0; j < 3; ++j) {
      auto w = ce.omega2.find({m + j, m + i});
      if (w != ce.omega2.end()) e = e + detail::var(sp, m + j) * w->second;
      for (std::size_t k = 0; k < 3; ++k) {
        SymExpr tt = ts.T(m + i, m + j, m + k);
        if (!tt.is_zero()) e = e + detail::var(sp, m + j, tt) * ce.eta2[k];
      }
    }
    for (std::size_t a = 0; a < m; ++a)
      for (std::size_t b = 0; b < m; ++b)
        if (spec.structure(i)(a, b) != 0)
          e = e - detail::var(sp, a, SymExpr(2) * detail::J(spec, i, a, b)) * ce.theta3[b];
    ce.eta4.push_back(Rational(1, 4) * e);
  }
  return ce;
}

/// Coefficients of X_a^{(1)} = s_a^{b(2)} X~_b + r_a^{j(3)} V~_j and
/// V_i^{(0)} = s_i^{b(1)} X~_b + r_i^{j(2)} V~_j.
struct ExpansionCoefficients {
  GradedSpace space;
  std::vector<std::vector<SymPoly>> s_h;  // [a][b]  s_a^{b(2)}
  std::vector<std::vector<SymPoly>> r_h;  // [a][j]  r_a^{j(3)}
  std::vector<std::vector<SymPoly>> s_v;  // [i][b]  s_i^{b(1)}
  std::vector<std::vector<SymPoly>> r_v;  // [i][j]  r_i^{j(2)}
  FrameCoefficients<SymExpr> table;       // full frame_inversion output

  friend bool operator==(const ExpansionCoefficients& a, const ExpansionCoefficients& b) {
    return a.s_h == b.s_h && a.r_h == b.r_h && a.s_v == b.s_v && a.r_v == b.r_v;
  }
};

/// The displayed closed forms:
///   s_a^{b(2)} = -R^b_{gad} x_g x_d/6 - T^b_{i'a} z_i/3
///   r_a^{j(3)} = -R^{j'}_{gai'} x_g z_i/8 + I^j_{g'd'} x_{g'} (R^{d'}_{dag} x_g x_d/6 + T^{d'}_{k'a} z_k/3)/2
///   s_i^{b(1)} = T^b_{i'g} x_g/3
///   r_i^{j(2)} = -T^{j'}_{k'i'} z_k/4 - I^j_{gd} T^d_{i'd'} x_g x_{d'}/6
inline ExpansionCoefficients closed_form_coefficients(const GroupSpec& spec, const TensorSymbols& ts) {
  const std::size_t m = ts.horizontal_dim();
  const GradedSpace sp = detail::qc_space(ts);
  using detail::var;
  ExpansionCoefficients ec;
  ec.space = sp;
  ec.s_h.assign(m, std::vector<SymPoly>(m, SymPoly(sp)));
  ec.r_h.assign(m, std::vector<SymPoly>(3, SymPoly(sp)));
  ec.s_v.assign(3, std::vector<SymPoly>(m, SymPoly(sp)));
  ec.r_v.assign(3, std::vector<SymPoly>(3, SymPoly(sp)));
  for (std::size_t a = 0; a < m; ++a)
    for (std::size_t b = 0; b < m; ++b) {
      SymPoly& s = ec.s_h[a][b];
      for (std::size_t g = 0; g < m; ++g)
        for (std::size_t d = 0; d < m; ++d) s += var(sp, g) * var(sp, d, Rational(-1, 6) * ts.R(b, g, a, d));
      for (std::size_t i = 0; i < 3; ++i) s += var(sp, m + i, Rational(-1, 3) * ts.T(b, m + i, a));
    }
  for (std::size_t a = 0; a < m; ++a)
    for (std::size_t j = 0; j < 3; ++j) {
      SymPoly& r = ec.r_h[a][j];
      for (std::size_t g = 0; g < m; ++g)
        for (std::size_t i = 0; i < 3; ++i) r += var(sp, g) * var(sp, m + i, Rational(-1, 8) * ts.R(m + j, g, a, m + i));
      for (std::size_t gp = 0; gp < m; ++gp)
        for (std::size_t dp = 0; dp < m; ++dp) {
          if (spec.structure(j)(gp, dp) == 0) continue;
          SymPoly inner(sp);
          for (std::size_t g = 0; g < m; ++g)
            for (std::size_t d = 0; d < m; ++d) inner += var(sp, g) * var(sp, d, Rational(1, 6) * ts.R(dp, d, a, g));
          for (std::size_t k = 0; k < 3; ++k) inner += var(sp, m + k, Rational(1, 3) * ts.T(dp, m + k, a));
          r += var(sp, gp, Rational(1, 2) * spec.structure(j)(gp, dp)) * inner;
        }
    }
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t b = 0; b < m; ++b)
      for (std::size_t g = 0; g < m; ++g) ec.s_v[i][b] += var(sp, g, Rational(1, 3) * ts.T(b, m + i, g));
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) {
      SymPoly& r = ec.r_v[i][j];
      for (std::size_t k = 0; k < 3; ++k) r += var(sp, m + k, Rational(-1, 4) * ts.T(m + j, m + k, m + i));
      for (std::size_t g = 0; g < m; ++g)
        for (std::size_t d = 0; d < m; ++d) {
          if (spec.structure(j)(g, d) == 0) continue;
          for (std::size_t dp = 0; dp < m; ++dp)
            r += var(sp, g) * var(sp, dp, Rational(-1, 6) * spec.structure(j)(g, d) * ts.T(d, m + i, dp));
        }
    }
  return ec;
}

/// Runs frame_inversion on the coframe and reads off the same table.
inline ExpansionCoefficients inverted_coefficients(const GroupSpec& spec, const CoframeExpansion& ce,
                                                   int max_order = 4) {
  const GradedSpace sp = ce.space;
  const std::size_t m = sp.m;
  auto frame = left_invariant_frame<SymExpr>(spec);
  ExpansionCoefficients ec;
  ec.space = sp;
  ec.table = frame_inversion(frame, ce.series(), max_order);
  auto get = [&](std::size_t a, std::size_t b, int p) {
    const auto& v = ec.table[a][b][p];
    if (!v) throw InvariantViolation("frame inversion did not reach a required coefficient");
    return *v;
  };
  ec.s_h.assign(m, std::vector<SymPoly>(m));
  ec.r_h.assign(m, std::vector<SymPoly>(3));
  ec.s_v.assign(3, std::vector<SymPoly>(m));
  ec.r_v.assign(3, std::vector<SymPoly>(3));
  for (std::size_t a = 0; a < m; ++a) {
    for (std::size_t b = 0; b < m; ++b) ec.s_h[a][b] = get(a, b, 2);
    for (std::size_t j = 0; j < 3; ++j) ec.r_h[a][j] = get(a, m + j, 3);
  }
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t b = 0; b < m; ++b) ec.s_v[i][b] = get(m + i, b, 1);
    for (std::size_t j = 0; j < 3; ++j) ec.r_v[i][j] = get(m + i, m + j, 2);
  }
  return ec;
}

/// Both routes; a mismatch is a hard failure.
inline ExpansionCoefficients expansion_coefficients(const GroupSpec& spec, const TensorSymbols& ts) {
  auto closed = closed_form_coefficients(spec, ts);
  auto inverted = inverted_coefficients(spec, build_coframe(spec, ts));
  const std::size_t m = ts.horizontal_dim();
  auto fail = [](const std::string& what) { throw InvariantViolation("expansion routes disagree at " + what); };
  for (std::size_t a = 0; a < m; ++a) {
    for (std::size_t b = 0; b < m; ++b)
      if (!(closed.s_h[a][b] == inverted.s_h[a][b]))
        fail("s_" + std::to_string(a + 1) + "^" + std::to_string(b + 1) + "(2)");
    for (std::size_t j = 0; j < 3; ++j)
      if (!(closed.r_h[a][j] == inverted.r_h[a][j]))
        fail("r_" + std::to_string(a + 1) + "^" + std::to_string(j + 1) + "'(3)");
  }
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t b = 0; b < m; ++b)
      if (!(closed.s_v[i][b] == inverted.s_v[i][b]))
        fail("s_" + std::to_string(i + 1) + "'^" + std::to_string(b + 1) + "(1)");
    for (std::size_t j = 0; j < 3; ++j)
      if (!(closed.r_v[i][j] == inverted.r_v[i][j]))
        fail("r_" + std::to_string(i + 1) + "'^" + std::to_string(j + 1) + "'(2)");
  }
  closed.table = std::move(inverted.table);
  return closed;
}

/// X_a^{(1)} as a coordinate vector field.
inline std::vector<SymField> first_correction_fields(const GroupSpec& spec, const ExpansionCoefficients& ec) {
  auto frame = left_invariant_frame<SymExpr>(spec);
  const std::size_t m = ec.space.m;
  std::vector<SymField> out;
  for (std::size_t a = 0; a < m; ++a) {
    SymField X(ec.space);
    for (std::size_t b = 0; b < m; ++b)
      if (!ec.s_h[a][b].is_zero()) X = X + ec.s_h[a][b] * frame[b];
    for (std::size_t j = 0; j < 3; ++j)
      if (!ec.r_h[a][j].is_zero()) X = X + ec.r_h[a][j] * frame[m + j];
    out.push_back(std::move(X));
  }
  return out;
}

/// D_a = X~_b(s_a^{b(2)}) - X~_a(s_b^{b(2)}) + V~_i(r_a^{i(3)}) - X~_a(r_i^{i(2)}).
inline std::vector<SymPoly> divergence_coefficient(const GroupSpec& spec, const ExpansionCoefficients& ec) {
  auto frame = left_invariant_frame<SymExpr>(spec);
  const std::size_t m = ec.space.m;
  SymPoly trace_s(ec.space), trace_r(ec.space);
  for (std::size_t b = 0; b < m; ++b) trace_s += ec.s_h[b][b];
  for (std::size_t i = 0; i < 3; ++i) trace_r += ec.r_v[i][i];
  std::vector<SymPoly> out;
  for (std::size_t a = 0; a < m; ++a) {
    SymPoly d(ec.space);
    for (std::size_t b = 0; b < m; ++b) d += frame[b].apply(ec.s_h[a][b]);
    d -= frame[a].apply(trace_s);
    for (std::size_t i = 0; i < 3; ++i) d += frame[m + i].apply(ec.r_h[a][i]);
    d -= frame[a].apply(trace_r);
    out.push_back(std::move(d));
  }
  return out;
}

/// epsilon-expansion of the rescaled frame X^eps_a = eps^{w_a} delta_eps^* X_a and
/// coframe theta^eps_c = eps^{-w_c} delta_eps^* theta_c, read from the frame
/// inversion table and the coframe series.
class RescaledFrame {
 public:
  RescaledFrame(const GroupSpec& spec, const CoframeExpansion& ce, const ExpansionCoefficients& ec)
      : sp_(ce.space), frame_(left_invariant_frame<SymExpr>(spec)), coframe_(ce.series()), table_(ec.table) {
    if (table_.empty()) throw InputError("expansion coefficients carry no frame inversion table");
  }

  /// eps^k coefficient of X^eps_a: sum_b c_a^{b(k - w_a + w_b)} E_b.
  const SymField& field(std::size_t a, int k) {
    auto key = std::make_pair(a, k);
    auto it = fields_.find(key);
    if (it != fields_.end()) return it->second;
    SymField X(sp_);
    for (std::size_t b = 0; b < frame_.size(); ++b) {
      int p = k - sp_.weight(a) + sp_.weight(b);
      if (p < 0) continue;
      if (p >= static_cast<int>(table_[a][b].size()) || !table_[a][b][p])
        throw InvariantViolation("rescaled frame needs an unavailable coefficient");
      if (!table_[a][b][p]->is_zero()) X = X + *table_[a][b][p] * frame_[b];
    }
    return fields_.emplace(key, std::move(X)).first->second;
  }

  /// eps^k coefficient of theta^eps_c.
  const SymForm& form(std::size_t c, int k) {
    int order = k + sp_.weight(c);
    if (order > coframe_[c].known_through) throw InvariantViolation("rescaled coframe needs an unknown term");
    auto it = coframe_[c].parts.find(order);
    if (it == coframe_[c].parts.end()) it = coframe_[c].parts.emplace(order, SymForm(sp_)).first;
    return it->second;
  }

  /// eps^k coefficient of c^a_{b alpha}(eps) = theta^eps_a([X^eps_b, X^eps_alpha]).
  SymPoly structure_function(std::size_t a, std::size_t b, std::size_t alpha, int k) {
    SymPoly out(sp_);
    for (int k1 = 0; k1 <= k; ++k1)
      for (int k2 = 0; k1 + k2 <= k; ++k2) {
        const SymField& X = field(b, k1);
        const SymField& Y = field(alpha, k2);
        if (X.is_zero() || Y.is_zero()) continue;
        SymField br = lie_bracket(X, Y);
        if (br.is_zero()) continue;
        for (int k3 = 0; k1 + k2 + k3 <= k; ++k3)
          if (k1 + k2 + k3 == k) out += pair(form(a, k3), br);
      }
    return out;
  }

  const GradedSpace& space() const noexcept { return sp_; }
  std::size_t size() const noexcept { return frame_.size(); }

 private:
  GradedSpace sp_;
  std::vector<SymField> frame_;
  std::vector<CoframeSeries<SymExpr>> coframe_;
  FrameCoefficients<SymExpr> table_;
  std::map<std::pair<std::size_t, int>, SymField> fields_;
};

/// eps^k coefficient of sum_a c^a_{a alpha}(eps), computed from brackets.
inline std::vector<SymPoly> divergence_from_brackets(const GroupSpec& spec, const CoframeExpansion& ce,
                                                     const ExpansionCoefficients& ec, int k = 2) {
  RescaledFrame rf(spec, ce, ec);
  std::vector<SymPoly> out;
  for (std::size_t alpha = 0; alpha < ce.space.m; ++alpha) {
    SymPoly s(ce.space);
    for (std::size_t a = 0; a < rf.size(); ++a) s += rf.structure_function(a, a, alpha, k);
    out.push_back(std::move(s));
  }
  return out;
}

/// Second-order operator in the left-invariant frame: sum over words w (sorted
/// frame indices, length <= 2) of coefficient(w)(x, z) E_w.
class PerturbationOperator {
 public:
  using Word = std::vector<std::size_t>;

  PerturbationOperator() = default;
  PerturbationOperator(const GroupSpec& spec, const GradedSpace& sp) : spec_(&spec), sp_(sp) {}

  const GradedSpace& space() const noexcept { return sp_; }
  const std::map<Word, SymPoly>& terms() const noexcept { return terms_; }
  bool is_zero() const noexcept { return terms_.empty(); }

  /// Adds f E_a E_b (any order), normal-ordered via [X~_a, X~_b] = 2 J^i_{ab} V~_i.
  void add(const SymPoly& f, Word w) {
    if (f.is_zero()) return;
    if (w.size() == 2 && w[0] > w[1]) {
      std::size_t a = w[0], b = w[1];
      add(f, {b, a});
      if (a < sp_.m && b < sp_.m)
        for (std::size_t i = 0; i < sp_.r; ++i) {
          const Rational& j = spec_->structure(i)(a, b);
          if (j != 0) add(SymExpr(Rational(2 * j)) * f, {sp_.m + i});
        }
      return;
    }
    auto [it, inserted] = terms_.try_emplace(w, f);
    if (!inserted) {
      it->second += f;
      if (it->second.is_zero()) terms_.erase(it);
    }
  }
  void add(const PerturbationOperator& o) {
    for (const auto& [w, f] : o.terms_) add(f, w);
  }

  /// Operator order of every term: weight(coefficient) - sum of word weights.
  std::vector<int> orders() const {
    std::vector<int> o;
    for (const auto& [w, f] : terms_) {
      int ww = 0;
      for (auto a : w) ww += sp_.weight(a);
      for (int k : f.weights()) o.push_back(k - ww);
    }
    std::sort(o.begin(), o.end());
    o.erase(std::unique(o.begin(), o.end()), o.end());
    return o;
  }

  bool has_vertical_pair() const {
    for (const auto& [w, f] : terms_)
      if (w.size() == 2 && w[0] >= sp_.m && w[1] >= sp_.m) return true;
    return false;
  }

  DiffOp<SymExpr> to_coordinates() const {
    auto frame = left_invariant_frame<SymExpr>(*spec_);
    std::vector<DiffOp<SymExpr>> ops;
    for (const auto& X : frame) ops.push_back(DiffOp<SymExpr>::from_field(X));
    DiffOp<SymExpr> out(sp_);
    for (const auto& [w, f] : terms_) {
      DiffOp<SymExpr> word = DiffOp<SymExpr>::multiplication(f);
      for (auto a : w) word = compose(word, ops[a]);
      out = out + word;
    }
    return out;
  }

  std::string to_string() const {
    std::ostringstream os;
    for (const auto& [w, f] : terms_) {
      os << "[" << f.to_string() << "]";
      for (auto a : w) os << " " << (a < sp_.m ? "X" + std::to_string(a + 1) : "V" + std::to_string(a - sp_.m + 1));
      os << "\n";
    }
    return os.str();
  }

 private:
  const GroupSpec* spec_ = nullptr;
  GradedSpace sp_;
  std::map<Word, SymPoly> terms_;
};

struct P2Split {
  PerturbationOperator p21;  // X~_a X_a^{(1)} + X_a^{(1)} X~_a
  PerturbationOperator p22;  // D_a X~_a
  PerturbationOperator total;
};

/// P2 = X~_a X_a^{(1)} + X_a^{(1)} X~_a + D_a X~_a in normal-ordered frame form.
inline P2Split build_P2(const GroupSpec& spec, const ExpansionCoefficients& ec) {
  const GradedSpace sp = ec.space;
  const std::size_t m = sp.m;
  auto frame = left_invariant_frame<SymExpr>(spec);
  P2Split out{PerturbationOperator(spec, sp), PerturbationOperator(spec, sp), PerturbationOperator(spec, sp)};
  for (std::size_t a = 0; a < m; ++a) {
    auto term = [&](const SymPoly& f, std::size_t b) {
      if (f.is_zero()) return;
      out.p21.add(frame[a].apply(f), {b});  // X~_a (f E_b) = X~_a(f) E_b + f X~_a E_b
      out.p21.add(f, {a, b});
      out.p21.add(f, {b, a});
    };
    for (std::size_t b = 0; b < m; ++b) term(ec.s_h[a][b], b);
    for (std::size_t j = 0; j < 3; ++j) term(ec.r_h[a][j], m + j);
  }
  auto d = divergence_coefficient(spec, ec);
  for (std::size_t a = 0; a < m; ++a) out.p22.add(d[a], {a});
  out.total.add(out.p21);
  out.total.add(out.p22);
  return out;
}

/// P1 from the order-1 parts of the frame: X~_a X_a^{(0)} + X_a^{(0)} X~_a + D^{(1)}_a X~_a.
inline PerturbationOperator build_P1(const GroupSpec& spec, const CoframeExpansion& ce,
                                     const ExpansionCoefficients& ec) {
  const GradedSpace sp = ce.space;
  auto frame = left_invariant_frame<SymExpr>(spec);
  auto d1 = divergence_from_brackets(spec, ce, ec, 1);
  PerturbationOperator op(spec, sp);
  for (std::size_t a = 0; a < sp.m; ++a) {
    for (std::size_t b = 0; b < frame.size(); ++b) {
      // X^{(0)}_a in the frame: coefficient c_a^{b(w_b)}
      const auto& c = ec.table[a][b][sp.weight(b)];
      if (!c || c->is_zero()) continue;
      op.add(frame[a].apply(*c), {b});
      op.add(*c, {a, b});
      op.add(*c, {b, a});
    }
    op.add(d1[a], {a});
  }
  return op;
}

/// O(4n) x O(3)-class of a convolution moment
///   int_0^1 int p(1-s, 0, xi) xi^e d^f p(s, xi, 0) dxi ds.
/// Slots: cx x-factors, dx x-derivatives, cz z-factors, dz z-derivatives;
/// kx, kz count factor-derivative pairings in the isotropic decomposition.
struct MomentClass {
  unsigned cx = 0, dx = 0, cz = 0, dz = 0;
  unsigned kx = 0, kz = 0;

  friend auto operator<=>(const MomentClass&, const MomentClass&) = default;

  /// Moment rule of the vanishing argument this shape belongs to (0 = none).
  int rule() const {
    if (cx == 2 && dx == 0 && cz == 0 && dz == 1) return 1;
    if (cx == 2 && dx == 2 && cz == 0 && dz == 0) return 2;
    if (cx == 0 && dx == 0 && cz == 0 && dz == 1) return 3;
    if (cx == 4 && dx == 0 && cz == 0 && dz == 2) return 4;
    return 0;
  }
  std::string shape() const {
    std::string s;
    for (unsigned i = 0; i < cx; ++i) s += "x";
    for (unsigned i = 0; i < cz; ++i) s += "z";
    for (unsigned i = 0; i < dx; ++i) s += "∂x";
    for (unsigned i = 0; i < dz; ++i) s += "∂z";
    return s.empty() ? "1" : s;
  }
  std::string label() const {
    auto group = [](unsigned c, unsigned d, unsigned k) {
      return "cc" + std::to_string((c - k) / 2) + "cd" + std::to_string(k) + "dd" + std::to_string((d - k) / 2);
    };
    return "M[" + shape() + "; x:" + group(cx, dx, kx) + " z:" + group(cz, dz, kz) + "]";
  }
};

namespace detail {
/// Number of perfect matchings of c factor slots and d derivative slots with
/// exactly k mixed pairs.
inline long matchings(unsigned c, unsigned d, unsigned k) {
  if (k > c || k > d || (c - k) % 2 || (d - k) % 2) return 0;
  auto binom = [](unsigned n, unsigned r) {
    long v = 1;
    for (unsigned i = 0; i < r; ++i) v = v * (n - i) / (i + 1);
    return v;
  };
  auto dfact = [](unsigned n) {  // (n-1)!! for even n
    long v = 1;
    for (unsigned i = n; i > 1; i -= 2) v *= i - 1;
    return v;
  };
  long f = 1;
  for (unsigned i = 2; i <= k; ++i) f *= i;
  return binom(c, k) * binom(d, k) * f * dfact(c - k) * dfact(d - k);
}

/// Polynomial in k (index = number of mixed pairs) counting index-compatible
/// matchings over a block of coordinates.
inline std::vector<long> pairing_counts(const std::vector<std::pair<unsigned, unsigned>>& slots) {
  std::vector<long> acc{1};
  for (auto [c, d] : slots) {
    if (c + d == 0) continue;
    std::vector<long> one(std::min(c, d) + 1, 0);
    for (unsigned k = 0; k < one.size(); ++k) one[k] = matchings(c, d, k);
    std::vector<long> next(acc.size() + one.size() - 1, 0);
    for (std::size_t i = 0; i < acc.size(); ++i)
      for (std::size_t j = 0; j < one.size(); ++j) next[i + j] += acc[i] * one[j];
    acc = std::move(next);
  }
  return acc;
}
}  // namespace detail

struct C1Reduction {
  std::vector<MomentClass> classes;  // nonvanishing classes that occur
  std::vector<Rational> kappa_coefficients;  // a_k, c1 = (sum a_k M_k) kappa
  std::map<int, std::size_t> vanished_by_rule;  // parity-zero coordinate terms by moment rule
  std::size_t coordinate_terms = 0;
  std::string log;

  bool is_zero() const {
    return std::all_of(kappa_coefficients.begin(), kappa_coefficients.end(), [](const Rational& q) { return q == 0; });
  }
  std::string final_line() const {
    if (is_zero()) return "c1 = 0";
    std::ostringstream os;
    os << "c1 = (";
    bool first = true;
    for (std::size_t k = 0; k < classes.size(); ++k) {
      if (kappa_coefficients[k] == 0) continue;
      os << (first ? "" : " + ") << "(" << to_string(kappa_coefficients[k]) << ")*" << classes[k].label();
      first = false;
    }
    os << ")*kappa";
    return os.str();
  }
};

/// Classifies every coordinate term of P2 by its convolution moment, collapses
/// tensor contractions with the qc-normal relations and requires the result to
/// be a multiple of kappa.
inline C1Reduction reduce_c1(const GroupSpec& spec, const TensorSymbols& ts,
                             const std::vector<Relation>& relations) {
  auto ec = expansion_coefficients(spec, ts);
  auto p2 = build_P2(spec, ec);
  C1Reduction out;
  std::ostringstream log;
  log << "level n = " << ts.level() << (ts.torsion_enabled() ? "" : " (torsion off)")
      << (ts.curvature_enabled() ? "" : " (curvature off)") << "\n";
  log << "P2 frame terms: " << p2.p21.terms().size() << " (P21) + " << p2.p22.terms().size() << " (P22) -> "
      << p2.total.terms().size() << "\n";
  if (p2.total.has_vertical_pair()) throw InvariantViolation("P2 contains a V~V~ term");
  for (int o : p2.total.orders())
    if (o != 0) throw InvariantViolation("P2 is not homogeneous of order 0");

  const GradedSpace sp = ec.space;
  auto coord = p2.total.to_coordinates();
  std::map<MomentClass, SymExpr> raw;
  std::map<std::tuple<unsigned, unsigned, unsigned, unsigned>, std::pair<std::size_t, std::size_t>> shapes;
  for (const auto& [d, coef] : coord.terms())
    for (const auto& [mono, e] : coef.terms()) {
      ++out.coordinate_terms;
      std::vector<std::pair<unsigned, unsigned>> xs, zs;
      MomentClass base;
      bool odd = false;
      for (std::size_t k = 0; k < sp.dim(); ++k) {
        unsigned c = mono.exponent(k), dd = d.exponent(k);
        odd = odd || (c + dd) % 2;
        if (k < sp.m) {
          xs.emplace_back(c, dd);
          base.cx += c, base.dx += dd;
        } else {
          zs.emplace_back(c, dd);
          base.cz += c, base.dz += dd;
        }
      }
      auto& sh = shapes[{base.cx, base.dx, base.cz, base.dz}];
      if (odd) {
        ++sh.first;
        ++out.vanished_by_rule[base.rule()];
        continue;
      }
      ++sh.second;
      auto px = detail::pairing_counts(xs), pz = detail::pairing_counts(zs);
      for (std::size_t kx = 0; kx < px.size(); ++kx)
        for (std::size_t kz = 0; kz < pz.size(); ++kz) {
          long cnt = px[kx] * pz[kz];
          if (cnt == 0) continue;
          MomentClass mc = base;
          mc.kx = static_cast<unsigned>(kx), mc.kz = static_cast<unsigned>(kz);
          raw[mc] += SymExpr(cnt) * e;
        }
    }
  log << "coordinate terms: " << out.coordinate_terms << "\n";
  for (const auto& [s, cnt] : shapes) {
    MomentClass mc{std::get<0>(s), std::get<1>(s), std::get<2>(s), std::get<3>(s)};
    log << "  shape " << mc.shape();
    if (mc.rule()) log << " [moment rule (" << mc.rule() << ")]";
    else log << " [general isotropic class]";
    log << ": " << cnt.first << " terms vanish by parity, " << cnt.second << " paired\n";
  }
  RewriteSystem rw(relations);
  log << "rewrite system: " << relations.size() << " relations, rank " << rw.rank() << "\n";
  for (const auto& [mc, e] : raw) {
    SymExpr nf = rw.normal_form(e);
    log << "  " << mc.label() << ": " << e.terms().size() << " raw contractions -> " << nf.to_string(sp.m) << "\n";
    for (const auto& [mo, c] : nf.terms())
      if (mo.empty() || mo.front() != atom::kKappa)
        throw InvariantViolation("residual tensor symbol in " + mc.label() + ": " + nf.to_string(sp.m));
    if (nf.is_zero()) continue;
    out.classes.push_back(mc);
    out.kappa_coefficients.push_back(nf.coefficient(atom::kKappa));
  }
  out.log = log.str();
  out.log += out.final_line() + "\n";
  return out;
}

inline C1Reduction reduce_c1(const GroupSpec& spec, const TensorSymbols& ts) {
  return reduce_c1(spec, ts, qc_normal_relations(ts));
}

}  // namespace qcheat
