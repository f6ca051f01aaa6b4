#pragma once

// Formal torsion and curvature components of the Biquard connection in a
// qc-normal frame (X_1..X_4n, V_1..V_3), as a commutative coefficient ring.
// Frame indices are 0-based: a < 4n horizontal, a >= 4n vertical.
//
//   T(c; a, b)    = T^c_{ab},    antisymmetric in (a, b)
//   R(d; a, b, c) = R^d_{abc},   antisymmetric in (a, b)
//   kappa         = qc-scalar curvature

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "qcheat/error.hpp"
#include "qcheat/group.hpp"
#include "qcheat/rational.hpp"

namespace qcheat {

/// Packed symbol id: kind in the top byte, up to four 4-bit indices below.
/// kappa sorts after every tensor component.
using Atom = std::uint32_t;

namespace atom {
inline constexpr std::uint32_t kTorsion = 1;
inline constexpr std::uint32_t kCurvature = 2;
inline constexpr Atom kKappa = 0xFFFFFFF0u;

inline Atom torsion(std::size_t c, std::size_t a, std::size_t b) {
  return (kTorsion << 24) | (static_cast<Atom>(c) << 12) | (static_cast<Atom>(a) << 8) |
         (static_cast<Atom>(b) << 4);
}
inline Atom curvature(std::size_t d, std::size_t a, std::size_t b, std::size_t c) {
  return (kCurvature << 24) | (static_cast<Atom>(d) << 12) | (static_cast<Atom>(a) << 8) |
         (static_cast<Atom>(b) << 4) | static_cast<Atom>(c);
}
inline std::uint32_t kind(Atom x) { return x == kKappa ? 0 : x >> 24; }
inline std::size_t index(Atom x, int slot) { return (x >> (12 - 4 * slot)) & 0xF; }
}  // namespace atom

/// Polynomial in atoms with rational coefficients.
class SymExpr {
 public:
  using Mono = std::vector<Atom>;  // sorted, with repetition
  using Terms = std::map<Mono, Rational>;

  SymExpr() = default;
  SymExpr(long c) : SymExpr(Rational(c)) {}  // NOLINT(google-explicit-constructor)
  SymExpr(int c) : SymExpr(Rational(c)) {}   // NOLINT(google-explicit-constructor)
  SymExpr(const Rational& c) {               // NOLINT(google-explicit-constructor)
    if (c != 0) t_.emplace(Mono{}, c);
  }
  static SymExpr symbol(Atom a, const Rational& c = 1) {
    SymExpr e;
    if (c != 0) e.t_.emplace(Mono{a}, c);
    return e;
  }

  const Terms& terms() const noexcept { return t_; }
  bool is_zero() const noexcept { return t_.empty(); }
  bool is_constant() const noexcept { return t_.empty() || (t_.size() == 1 && t_.begin()->first.empty()); }
  Rational constant() const {
    auto it = t_.find(Mono{});
    return it == t_.end() ? Rational(0) : it->second;
  }
  unsigned degree() const {
    std::size_t d = 0;
    for (const auto& [mo, c] : t_) d = std::max(d, mo.size());
    return static_cast<unsigned>(d);
  }
  Rational coefficient(Atom a) const {
    auto it = t_.find(Mono{a});
    return it == t_.end() ? Rational(0) : it->second;
  }

  void add_term(const Mono& mo, const Rational& c) {
    if (c == 0) return;
    auto [it, inserted] = t_.try_emplace(mo, c);
    if (!inserted) {
      it->second += c;
      if (it->second == 0) t_.erase(it);
    }
  }

  SymExpr& operator+=(const SymExpr& o) {
    for (const auto& [mo, c] : o.t_) add_term(mo, c);
    return *this;
  }
  SymExpr& operator-=(const SymExpr& o) {
    for (const auto& [mo, c] : o.t_) add_term(mo, -c);
    return *this;
  }
  friend SymExpr operator+(SymExpr a, const SymExpr& b) { return a += b; }
  friend SymExpr operator-(SymExpr a, const SymExpr& b) { return a -= b; }
  friend SymExpr operator-(const SymExpr& a) { return SymExpr(-1) * a; }
  friend SymExpr operator*(const SymExpr& a, const SymExpr& b) {
    SymExpr out;
    if (a.is_constant() || b.is_constant()) {
      const SymExpr& s = a.is_constant() ? a : b;
      const SymExpr& o = a.is_constant() ? b : a;
      Rational k = s.constant();
      if (k == 0) return out;
      out = o;
      for (auto& [mo, c] : out.t_) c *= k;
      return out;
    }
    for (const auto& [ma, ca] : a.t_)
      for (const auto& [mb, cb] : b.t_) {
        Mono mo;
        mo.reserve(ma.size() + mb.size());
        std::merge(ma.begin(), ma.end(), mb.begin(), mb.end(), std::back_inserter(mo));
        out.add_term(mo, ca * cb);
      }
    return out;
  }
  friend bool operator==(const SymExpr& a, const SymExpr& b) { return a.t_ == b.t_; }

  /// Replace every atom by f(atom) (a SymExpr) and expand.
  SymExpr substitute(const std::function<SymExpr(Atom)>& f) const {
    SymExpr out;
    std::map<Atom, SymExpr> memo;
    for (const auto& [mo, c] : t_) {
      SymExpr term(c);
      for (Atom a : mo) {
        auto it = memo.find(a);
        if (it == memo.end()) it = memo.emplace(a, f(a)).first;
        term = term * it->second;
      }
      out += term;
    }
    return out;
  }

  /// Numerical instantiation.
  double evaluate(const std::function<double(Atom)>& f) const {
    double s = 0;
    for (const auto& [mo, c] : t_) {
      double v = to_double(c);
      for (Atom a : mo) v *= f(a);
      s += v;
    }
    return s;
  }

  std::string to_string(std::size_t m = 0) const;

 private:
  Terms t_;
};

inline bool ring_is_zero(const SymExpr& e) { return e.is_zero(); }

/// "T^{c}_{ab}" with vertical indices primed and everything 1-based.
inline std::string atom_name(Atom a, std::size_t m) {
  auto idx = [&](std::size_t k) {
    return k < m || m == 0 ? std::to_string(k + 1) : std::to_string(k - m + 1) + "'";
  };
  switch (atom::kind(a)) {
    case 0:
      return "kappa";
    case atom::kTorsion:
      return "T^" + idx(atom::index(a, 0)) + "_{" + idx(atom::index(a, 1)) + "," + idx(atom::index(a, 2)) + "}";
    case atom::kCurvature:
      return "R^" + idx(atom::index(a, 0)) + "_{" + idx(atom::index(a, 1)) + "," + idx(atom::index(a, 2)) + "," +
             idx(atom::index(a, 3)) + "}";
    default:
      return "?";
  }
}

inline std::string SymExpr::to_string(std::size_t m) const {
  if (t_.empty()) return "0";
  std::ostringstream os;
  bool first = true;
  for (const auto& [mo, c] : t_) {
    if (!first) os << " + ";
    first = false;
    if (mo.empty() || c != 1) os << qcheat::to_string(c);
    for (std::size_t k = 0; k < mo.size(); ++k) os << (k == 0 && (c == 1) ? "" : "*") << atom_name(mo[k], m);
  }
  return os.str();
}
inline std::string ring_to_string(const SymExpr& e) { return e.to_string(); }

/// Generator of canonical symbols for level n. Disabling torsion or
/// curvature makes the corresponding components identically zero.
class TensorSymbols {
 public:
  explicit TensorSymbols(unsigned n, bool torsion = true, bool curvature = true)
      : n_(n), m_(4 * static_cast<std::size_t>(n)), torsion_(torsion), curvature_(curvature) {
    if (n == 0) throw InputError("level n must be at least 1");
    if (m_ + 3 > 16) throw InputError("symbolic layer supports n <= 3");
  }

  unsigned level() const noexcept { return n_; }
  std::size_t horizontal_dim() const noexcept { return m_; }
  std::size_t frame_dim() const noexcept { return m_ + 3; }
  bool torsion_enabled() const noexcept { return torsion_; }
  bool curvature_enabled() const noexcept { return curvature_; }

  /// T^c_{ab}, canonicalised to a < b.
  SymExpr T(std::size_t c, std::size_t a, std::size_t b) const {
    check(c), check(a), check(b);
    if (!torsion_ || a == b) return {};
    if (a > b) return SymExpr::symbol(atom::torsion(c, b, a), -1);
    return SymExpr::symbol(atom::torsion(c, a, b));
  }
  /// R^d_{abc}, canonicalised to a < b.
  SymExpr R(std::size_t d, std::size_t a, std::size_t b, std::size_t c) const {
    check(d), check(a), check(b), check(c);
    if (!curvature_ || a == b) return {};
    if (a > b) return SymExpr::symbol(atom::curvature(d, b, a, c), -1);
    return SymExpr::symbol(atom::curvature(d, a, b, c));
  }
  SymExpr kappa() const { return SymExpr::symbol(atom::kKappa); }

  /// Every canonical atom (for building linear systems).
  std::vector<Atom> atoms() const {
    std::vector<Atom> out;
    const std::size_t N = frame_dim();
    if (torsion_)
      for (std::size_t c = 0; c < N; ++c)
        for (std::size_t a = 0; a < N; ++a)
          for (std::size_t b = a + 1; b < N; ++b) out.push_back(atom::torsion(c, a, b));
    if (curvature_)
      for (std::size_t d = 0; d < N; ++d)
        for (std::size_t a = 0; a < N; ++a)
          for (std::size_t b = a + 1; b < N; ++b)
            for (std::size_t c = 0; c < N; ++c) out.push_back(atom::curvature(d, a, b, c));
    out.push_back(atom::kKappa);
    return out;
  }

 private:
  void check(std::size_t k) const {
    if (k >= frame_dim()) throw InputError("frame index out of range");
  }

  unsigned n_;
  std::size_t m_;
  bool torsion_;
  bool curvature_;
};

/// A linear relation sum c_k atom_k + constant = 0 with a label for the derivation log.
struct Relation {
  std::string label;
  SymExpr lhs;  // must be affine in atoms
};

/// Relations of a qc-normal frame at the origin (g(I_i X_a, X_b) = J^i_{ab} of
/// the quaternionic spec, I_i X_a = sum_b J^i_{ab} X_b):
///   T^{i'}_{ab} = -2 J^i_{ab},  T^{i'}_{i'j'} = 0,
///   sum_{a,b} J^i_{ab} T^b_{j'a} = 0,
///   sum J^i_{ag} J^i_{be} R^b_{age} = 2n kappa/(n+2),
///   sum J^i_{ag} J^i_{bd} R^d_{bga} = -n kappa/(n+2),
///   kappa = sum R^a_{abb}.
inline std::vector<Relation> qc_normal_relations(const TensorSymbols& ts) {
  const GroupSpec spec = make_quaternionic_spec(ts.level());
  const std::size_t m = ts.horizontal_dim();
  const Rational n(ts.level());
  std::vector<Relation> rel;
  auto J = [&](std::size_t i, std::size_t a, std::size_t b) -> const Rational& { return spec.structure(i)(a, b); };
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t a = 0; a < m; ++a)
      for (std::size_t b = a + 1; b < m; ++b) {
        std::ostringstream lab;
        lab << "vertical torsion T^{" << i + 1 << "'}_{" << a + 1 << "," << b + 1 << "} = -2 I^" << i + 1 << "_{"
            << a + 1 << "," << b + 1 << "}";
        rel.push_back({lab.str(), ts.T(m + i, a, b) + SymExpr(Rational(2) * J(i, a, b))});
      }
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j)
      if (i != j)
        rel.push_back({"T^{" + std::to_string(i + 1) + "'}_{" + std::to_string(i + 1) + "'," + std::to_string(j + 1) +
                           "'} = 0",
                       ts.T(m + i, m + i, m + j)});
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) {
      SymExpr s;
      for (std::size_t a = 0; a < m; ++a)
        for (std::size_t b = 0; b < m; ++b)
          if (J(i, a, b) != 0) s += SymExpr(J(i, a, b)) * ts.T(b, m + j, a);
      rel.push_back({"sum_ab I^" + std::to_string(i + 1) + "_{ab} T^b_{" + std::to_string(j + 1) + "',a} = 0", s});
    }
  for (std::size_t i = 0; i < 3; ++i) {
    SymExpr s4, s5;
    for (std::size_t a = 0; a < m; ++a)
      for (std::size_t g = 0; g < m; ++g) {
        if (J(i, a, g) == 0) continue;
        for (std::size_t b = 0; b < m; ++b)
          for (std::size_t e = 0; e < m; ++e) {
            if (J(i, b, e) == 0) continue;
            Rational k = J(i, a, g) * J(i, b, e);
            s4 += SymExpr(k) * ts.R(b, a, g, e);
            s5 += SymExpr(k) * ts.R(e, b, g, a);
          }
      }
    const std::string si = std::to_string(i + 1);
    rel.push_back({"sum g(R(X_a, I_" + si + " X_a) I_" + si + " X_b, X_b) = 2n kappa/(n+2)",
                   s4 - SymExpr(Rational(2) * n / (n + 2)) * ts.kappa()});
    rel.push_back({"sum g(R(X_b, I_" + si + " X_a) X_a, I_" + si + " X_b) = -n kappa/(n+2)",
                   s5 + SymExpr(n / (n + 2)) * ts.kappa()});
  }
  {
    SymExpr s;
    for (std::size_t a = 0; a < m; ++a)
      for (std::size_t b = 0; b < m; ++b) s += ts.R(a, a, b, b);
    rel.push_back({"kappa = sum R^a_{abb}", ts.kappa() - s});
  }
  return rel;
}

/// Row-reduced rewrite system for affine relations. Atoms are eliminated in
/// id order, so kappa (largest id) is the least preferred pivot and survives
/// as a free symbol whenever possible.
class RewriteSystem {
 public:
  explicit RewriteSystem(const std::vector<Relation>& relations) {
    std::vector<Row> in;
    std::vector<Atom> cols;
    for (const auto& r : relations) {
      if (r.lhs.degree() > 1) throw InputError("relation '" + r.label + "' is not affine");
      in.push_back(to_row(r.lhs));
      for (const auto& [a, c] : in.back()) cols.push_back(a);
    }
    std::sort(cols.begin(), cols.end());
    cols.erase(std::unique(cols.begin(), cols.end()), cols.end());
    // dense reduced row echelon form in column order
    std::vector<std::vector<Rational>> a(in.size(), std::vector<Rational>(cols.size()));
    for (std::size_t i = 0; i < in.size(); ++i)
      for (const auto& [at, c] : in[i])
        a[i][std::lower_bound(cols.begin(), cols.end(), at) - cols.begin()] = c;
    std::size_t rank = 0;
    for (std::size_t col = 0; col < cols.size() && rank < a.size(); ++col) {
      std::size_t piv = rank;
      while (piv < a.size() && a[piv][col] == 0) ++piv;
      if (piv == a.size()) continue;
      std::swap(a[piv], a[rank]);
      Rational lead = a[rank][col];
      for (auto& v : a[rank]) v /= lead;
      for (std::size_t i = 0; i < a.size(); ++i) {
        if (i == rank || a[i][col] == 0) continue;
        Rational f = a[i][col];
        for (std::size_t k = col; k < cols.size(); ++k)
          if (a[rank][k] != 0) a[i][k] -= f * a[rank][k];
      }
      if (cols[col] == kConst) throw InvariantViolation("inconsistent relations");
      ++rank;
    }
    for (std::size_t i = 0; i < rank; ++i) {
      Row row;
      for (std::size_t k = 0; k < cols.size(); ++k)
        if (a[i][k] != 0) row.emplace(cols[k], a[i][k]);
      rows_.emplace(row.begin()->first, std::move(row));
    }
  }

  std::size_t rank() const noexcept { return rows_.size(); }
  bool is_pivot(Atom a) const { return rows_.count(a) != 0; }

  /// Normal form of an affine expression.
  SymExpr normal_form(const SymExpr& e) const {
    if (e.degree() > 1) throw InputError("normal form requires an affine expression");
    Row row = to_row(e);
    reduce_row(row);
    SymExpr out;
    for (const auto& [a, c] : row) out += a == kConst ? SymExpr(c) : SymExpr::symbol(a, c);
    return out;
  }

 private:
  static constexpr Atom kConst = 0xFFFFFFFFu;
  using Row = std::map<Atom, Rational>;

  static Row to_row(const SymExpr& e) {
    Row row;
    for (const auto& [mo, c] : e.terms()) row[mo.empty() ? kConst : mo.front()] += c;
    std::erase_if(row, [](const auto& kv) { return kv.second == 0; });
    return row;
  }
  static void eliminate(Row& target, Atom piv, const Row& prow) {
    auto it = target.find(piv);
    if (it == target.end()) return;
    Rational f = it->second;
    for (const auto& [a, c] : prow) {
      Rational& v = target[a];
      v -= f * c;
      if (v == 0) target.erase(a);
    }
  }
  void reduce_row(Row& row) const {
    for (const auto& [piv, prow] : rows_) eliminate(row, piv, prow);
  }

  std::map<Atom, Row> rows_;
};

}  // namespace qcheat
