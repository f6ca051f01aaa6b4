#pragma once

// Polynomial vector fields and 1-forms on R^{m+r} with anisotropic weights
// ord x_a = 1, ord z_i = 2 (ord d/dx_a = -1, ord d/dz_i = -2). Coefficients
// live in a commutative ring R (Rational, or the tensor-symbol ring).

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "qcheat/error.hpp"
#include "qcheat/group.hpp"
#include "qcheat/rational.hpp"

namespace qcheat {

inline bool ring_is_zero(const Rational& q) { return q == 0; }
inline std::string ring_to_string(const Rational& q) { return to_string(q); }

/// Coordinates x_1..x_m (weight 1) then z_1..z_r (weight 2).
struct GradedSpace {
  std::size_t m = 0;
  std::size_t r = 0;

  std::size_t dim() const noexcept { return m + r; }
  int weight(std::size_t k) const noexcept { return k < m ? 1 : 2; }
  std::string name(std::size_t k) const {
    return k < m ? "x" + std::to_string(k + 1) : "z" + std::to_string(k - m + 1);
  }
  friend bool operator==(const GradedSpace&, const GradedSpace&) = default;
};

/// Exponent vector packed into 4-bit fields (at most 16 variables, exponents <= 15).
class Monomial {
 public:
  static constexpr std::size_t kMaxVars = 16;
  static constexpr unsigned kMaxExp = 15;

  constexpr Monomial() = default;
  static Monomial var(std::size_t k, unsigned e = 1) {
    if (k >= kMaxVars) throw InputError("too many variables for the packed monomial");
    if (e > kMaxExp) throw InputError("exponent too large");
    Monomial mo;
    mo.bits_ = static_cast<std::uint64_t>(e) << (4 * k);
    return mo;
  }

  unsigned exponent(std::size_t k) const noexcept { return static_cast<unsigned>((bits_ >> (4 * k)) & 0xF); }
  unsigned degree() const noexcept {
    unsigned d = 0;
    for (std::size_t k = 0; k < kMaxVars; ++k) d += exponent(k);
    return d;
  }
  int weight(const GradedSpace& sp) const noexcept {
    int w = 0;
    for (std::size_t k = 0; k < sp.dim(); ++k) w += sp.weight(k) * static_cast<int>(exponent(k));
    return w;
  }
  bool is_one() const noexcept { return bits_ == 0; }
  std::uint64_t bits() const noexcept { return bits_; }

  friend Monomial operator*(Monomial a, Monomial b) {
    std::uint64_t s = a.bits_ + b.bits_;
    std::uint64_t carries = (a.bits_ ^ b.bits_ ^ s) & 0x1111111111111110ULL;
    if (carries != 0 || s < a.bits_) throw InputError("monomial exponent overflow");
    Monomial out;
    out.bits_ = s;
    return out;
  }
  /// x^e / x_k, only when exponent(k) > 0.
  Monomial lowered(std::size_t k) const noexcept {
    Monomial out = *this;
    out.bits_ -= std::uint64_t{1} << (4 * k);
    return out;
  }

  friend auto operator<=>(const Monomial&, const Monomial&) = default;

 private:
  std::uint64_t bits_ = 0;
};

template <typename R>
class Poly {
 public:
  using Terms = std::map<Monomial, R>;

  Poly() = default;
  explicit Poly(const GradedSpace& sp) : sp_(sp) {}
  static Poly constant(const GradedSpace& sp, const R& c) {
    Poly p(sp);
    if (!ring_is_zero(c)) p.terms_.emplace(Monomial{}, c);
    return p;
  }
  static Poly variable(const GradedSpace& sp, std::size_t k, const R& c = R(1)) {
    Poly p(sp);
    if (!ring_is_zero(c)) p.terms_.emplace(Monomial::var(k), c);
    return p;
  }
  static Poly monomial(const GradedSpace& sp, Monomial mo, const R& c) {
    Poly p(sp);
    if (!ring_is_zero(c)) p.terms_.emplace(mo, c);
    return p;
  }

  const GradedSpace& space() const noexcept { return sp_; }
  const Terms& terms() const noexcept { return terms_; }
  bool is_zero() const noexcept { return terms_.empty(); }
  std::size_t size() const noexcept { return terms_.size(); }

  void add_term(Monomial mo, const R& c) {
    if (ring_is_zero(c)) return;
    auto [it, inserted] = terms_.try_emplace(mo, c);
    if (!inserted) {
      it->second = it->second + c;
      if (ring_is_zero(it->second)) terms_.erase(it);
    }
  }

  Poly& operator+=(const Poly& o) {
    adopt(o);
    for (const auto& [mo, c] : o.terms_) add_term(mo, c);
    return *this;
  }
  Poly& operator-=(const Poly& o) {
    adopt(o);
    for (const auto& [mo, c] : o.terms_) add_term(mo, R(-1) * c);
    return *this;
  }
  friend Poly operator+(Poly a, const Poly& b) { return a += b; }
  friend Poly operator-(Poly a, const Poly& b) { return a -= b; }
  friend Poly operator-(const Poly& a) { return R(-1) * a; }
  friend Poly operator*(const R& s, const Poly& a) {
    Poly out(a.sp_);
    if (ring_is_zero(s)) return out;
    for (const auto& [mo, c] : a.terms_) out.add_term(mo, s * c);
    return out;
  }
  friend Poly operator*(const Poly& a, const Poly& b) {
    Poly out(a.terms_.empty() ? b.sp_ : a.sp_);
    for (const auto& [ma, ca] : a.terms_)
      for (const auto& [mb, cb] : b.terms_) out.add_term(ma * mb, ca * cb);
    return out;
  }
  friend bool operator==(const Poly& a, const Poly& b) { return a.terms_ == b.terms_; }

  /// d/dvar_k
  Poly derivative(std::size_t k) const {
    Poly out(sp_);
    for (const auto& [mo, c] : terms_) {
      unsigned e = mo.exponent(k);
      if (e == 0) continue;
      out.add_term(mo.lowered(k), R(static_cast<long>(e)) * c);
    }
    return out;
  }

  /// Component with L_P eigenvalue l (weighted degree l).
  Poly homogeneous_part(int l) const {
    Poly out(sp_);
    for (const auto& [mo, c] : terms_)
      if (mo.weight(sp_) == l) out.terms_.emplace(mo, c);
    return out;
  }

  /// L_P f = sum_k w_k var_k d/dvar_k f.
  Poly lie_derivative_P() const {
    Poly out(sp_);
    for (const auto& [mo, c] : terms_) out.add_term(mo, R(static_cast<long>(mo.weight(sp_))) * c);
    return out;
  }

  /// Weighted degrees present.
  std::vector<int> weights() const {
    std::vector<int> w;
    for (const auto& [mo, c] : terms_) w.push_back(mo.weight(sp_));
    std::sort(w.begin(), w.end());
    w.erase(std::unique(w.begin(), w.end()), w.end());
    return w;
  }
  std::optional<int> homogeneous_weight() const {
    auto w = weights();
    if (w.size() == 1) return w.front();
    return std::nullopt;
  }

  /// Map every coefficient through f (ring change or substitution).
  template <typename F>
  auto map_coefficients(F&& f) const {
    using S = decltype(f(std::declval<const R&>()));
    Poly<S> out(sp_);
    for (const auto& [mo, c] : terms_) out.add_term(mo, f(c));
    return out;
  }

  std::string to_string() const {
    if (terms_.empty()) return "0";
    std::ostringstream os;
    bool first = true;
    for (const auto& [mo, c] : terms_) {
      if (!first) os << " + ";
      first = false;
      os << "(" << ring_to_string(c) << ")";
      for (std::size_t k = 0; k < sp_.dim(); ++k) {
        unsigned e = mo.exponent(k);
        if (e == 0) continue;
        os << "*" << sp_.name(k);
        if (e > 1) os << "^" << e;
      }
    }
    return os.str();
  }

 private:
  void adopt(const Poly& o) {
    if (sp_.dim() == 0) sp_ = o.sp_;
  }

  GradedSpace sp_;
  Terms terms_;
};

template <typename R>
inline bool ring_is_zero(const Poly<R>& p) {
  return p.is_zero();
}

/// sum_k coef_k d/dvar_k
template <typename R>
class VectorField {
 public:
  VectorField() = default;
  explicit VectorField(const GradedSpace& sp) : sp_(sp), c_(sp.dim(), Poly<R>(sp)) {}

  static VectorField coordinate(const GradedSpace& sp, std::size_t k, const R& c = R(1)) {
    VectorField v(sp);
    v.c_[k] = Poly<R>::constant(sp, c);
    return v;
  }

  const GradedSpace& space() const noexcept { return sp_; }
  Poly<R>& operator[](std::size_t k) { return c_[k]; }
  const Poly<R>& operator[](std::size_t k) const { return c_[k]; }
  bool is_zero() const {
    return std::all_of(c_.begin(), c_.end(), [](const Poly<R>& p) { return p.is_zero(); });
  }

  /// X(f)
  Poly<R> apply(const Poly<R>& f) const {
    Poly<R> out(sp_);
    for (std::size_t k = 0; k < c_.size(); ++k)
      if (!c_[k].is_zero()) out += c_[k] * f.derivative(k);
    return out;
  }

  friend VectorField operator+(VectorField a, const VectorField& b) {
    for (std::size_t k = 0; k < a.c_.size(); ++k) a.c_[k] += b.c_[k];
    return a;
  }
  friend VectorField operator-(VectorField a, const VectorField& b) {
    for (std::size_t k = 0; k < a.c_.size(); ++k) a.c_[k] -= b.c_[k];
    return a;
  }
  friend VectorField operator*(const Poly<R>& f, const VectorField& v) {
    VectorField out(v.sp_);
    for (std::size_t k = 0; k < v.c_.size(); ++k) out.c_[k] = f * v.c_[k];
    return out;
  }
  friend VectorField operator*(const R& s, const VectorField& v) {
    VectorField out(v.sp_);
    for (std::size_t k = 0; k < v.c_.size(); ++k) out.c_[k] = s * v.c_[k];
    return out;
  }
  friend bool operator==(const VectorField& a, const VectorField& b) { return a.c_ == b.c_; }

  /// Order of each term is weight(coefficient monomial) - weight(direction).
  VectorField homogeneous_part(int l) const {
    VectorField out(sp_);
    for (std::size_t k = 0; k < c_.size(); ++k) out.c_[k] = c_[k].homogeneous_part(l + sp_.weight(k));
    return out;
  }
  std::vector<int> orders() const {
    std::vector<int> o;
    for (std::size_t k = 0; k < c_.size(); ++k)
      for (int w : c_[k].weights()) o.push_back(w - sp_.weight(k));
    std::sort(o.begin(), o.end());
    o.erase(std::unique(o.begin(), o.end()), o.end());
    return o;
  }

  /// L_P X = [P, X]; on a component f d/dvar_k this is (L_P f - w_k f) d/dvar_k.
  VectorField lie_derivative_P() const {
    VectorField out(sp_);
    for (std::size_t k = 0; k < c_.size(); ++k)
      out.c_[k] = c_[k].lie_derivative_P() - R(static_cast<long>(sp_.weight(k))) * c_[k];
    return out;
  }

  template <typename F>
  auto map_coefficients(F&& f) const {
    using S = decltype(f(std::declval<const R&>()));
    VectorField<S> out(sp_);
    for (std::size_t k = 0; k < c_.size(); ++k) out[k] = c_[k].map_coefficients(f);
    return out;
  }

  std::string to_string() const {
    std::ostringstream os;
    bool first = true;
    for (std::size_t k = 0; k < c_.size(); ++k) {
      if (c_[k].is_zero()) continue;
      if (!first) os << " + ";
      first = false;
      os << "[" << c_[k].to_string() << "] d/d" << sp_.name(k);
    }
    return first ? "0" : os.str();
  }

 private:
  GradedSpace sp_;
  std::vector<Poly<R>> c_;
};

template <typename R>
VectorField<R> lie_bracket(const VectorField<R>& X, const VectorField<R>& Y) {
  VectorField<R> out(X.space());
  for (std::size_t k = 0; k < X.space().dim(); ++k) out[k] = X.apply(Y[k]) - Y.apply(X[k]);
  return out;
}

/// sum_k coef_k d var_k
template <typename R>
class Form {
 public:
  Form() = default;
  explicit Form(const GradedSpace& sp) : sp_(sp), c_(sp.dim(), Poly<R>(sp)) {}

  static Form differential(const GradedSpace& sp, std::size_t k, const R& c = R(1)) {
    Form f(sp);
    f.c_[k] = Poly<R>::constant(sp, c);
    return f;
  }

  const GradedSpace& space() const noexcept { return sp_; }
  Poly<R>& operator[](std::size_t k) { return c_[k]; }
  const Poly<R>& operator[](std::size_t k) const { return c_[k]; }
  bool is_zero() const {
    return std::all_of(c_.begin(), c_.end(), [](const Poly<R>& p) { return p.is_zero(); });
  }

  friend Form operator+(Form a, const Form& b) {
    if (a.c_.empty()) return b;
    for (std::size_t k = 0; k < a.c_.size(); ++k) a.c_[k] += b.c_[k];
    return a;
  }
  friend Form operator-(Form a, const Form& b) {
    if (a.c_.empty()) a = Form(b.sp_);
    for (std::size_t k = 0; k < a.c_.size(); ++k) a.c_[k] -= b.c_[k];
    return a;
  }
  friend Form operator*(const Poly<R>& f, const Form& w) {
    Form out(w.sp_);
    for (std::size_t k = 0; k < w.c_.size(); ++k) out.c_[k] = f * w.c_[k];
    return out;
  }
  friend Form operator*(const R& s, const Form& w) {
    Form out(w.sp_);
    for (std::size_t k = 0; k < w.c_.size(); ++k) out.c_[k] = s * w.c_[k];
    return out;
  }
  friend bool operator==(const Form& a, const Form& b) { return a.c_ == b.c_; }

  /// Order of each term is weight(coefficient monomial) + weight(differential).
  Form homogeneous_part(int l) const {
    Form out(sp_);
    for (std::size_t k = 0; k < c_.size(); ++k) out.c_[k] = c_[k].homogeneous_part(l - sp_.weight(k));
    return out;
  }
  std::vector<int> orders() const {
    std::vector<int> o;
    for (std::size_t k = 0; k < c_.size(); ++k)
      for (int w : c_[k].weights()) o.push_back(w + sp_.weight(k));
    std::sort(o.begin(), o.end());
    o.erase(std::unique(o.begin(), o.end()), o.end());
    return o;
  }

  /// L_P (f dv_k) = (L_P f + w_k f) dv_k.
  Form lie_derivative_P() const {
    Form out(sp_);
    for (std::size_t k = 0; k < c_.size(); ++k)
      out.c_[k] = c_[k].lie_derivative_P() + R(static_cast<long>(sp_.weight(k))) * c_[k];
    return out;
  }

  template <typename F>
  auto map_coefficients(F&& f) const {
    using S = decltype(f(std::declval<const R&>()));
    Form<S> out(sp_);
    for (std::size_t k = 0; k < c_.size(); ++k) out[k] = c_[k].map_coefficients(f);
    return out;
  }

  std::string to_string() const {
    std::ostringstream os;
    bool first = true;
    for (std::size_t k = 0; k < c_.size(); ++k) {
      if (c_[k].is_zero()) continue;
      if (!first) os << " + ";
      first = false;
      os << "[" << c_[k].to_string() << "] d" << sp_.name(k);
    }
    return first ? "0" : os.str();
  }

 private:
  GradedSpace sp_;
  std::vector<Poly<R>> c_;
};

template <typename R>
Poly<R> pair(const Form<R>& w, const VectorField<R>& X) {
  Poly<R> out(X.space());
  for (std::size_t k = 0; k < X.space().dim(); ++k)
    if (!w[k].is_zero() && !X[k].is_zero()) out += w[k] * X[k];
  return out;
}

/// The left-invariant frame of a step-two spec: X_a (a < m) and V_i = 2 d/dz_i.
template <typename R>
std::vector<VectorField<R>> left_invariant_frame(const GroupSpec& spec) {
  GradedSpace sp{spec.horizontal_dim(), spec.vertical_dim()};
  std::vector<VectorField<R>> frame;
  for (std::size_t a = 0; a < sp.m; ++a) {
    VectorField<R> X = VectorField<R>::coordinate(sp, a);
    for (std::size_t i = 0; i < sp.r; ++i)
      for (std::size_t b = 0; b < sp.m; ++b) {
        const Rational& j = spec.structure(i)(b, a);
        if (j != 0) X[sp.m + i] += Poly<R>::variable(sp, b, R(2 * j));
      }
    frame.push_back(std::move(X));
  }
  for (std::size_t i = 0; i < sp.r; ++i) frame.push_back(VectorField<R>::coordinate(sp, sp.m + i, R(2)));
  return frame;
}

/// Dual coframe of the left-invariant frame: dx_a and eta_i = dz_i/2 - sum J^i_{ab} x_a dx_b.
template <typename R>
std::vector<Form<R>> left_invariant_coframe(const GroupSpec& spec) {
  GradedSpace sp{spec.horizontal_dim(), spec.vertical_dim()};
  std::vector<Form<R>> coframe;
  for (std::size_t a = 0; a < sp.m; ++a) coframe.push_back(Form<R>::differential(sp, a));
  for (std::size_t i = 0; i < sp.r; ++i) {
    Form<R> eta = Form<R>::differential(sp, sp.m + i, R(Rational(1, 2)));
    for (std::size_t a = 0; a < sp.m; ++a)
      for (std::size_t b = 0; b < sp.m; ++b) {
        const Rational& j = spec.structure(i)(a, b);
        if (j != 0) eta[b] -= Poly<R>::variable(sp, a, R(j));
      }
    coframe.push_back(std::move(eta));
  }
  return coframe;
}

/// Coordinate differential operator sum_d c_d(x) d^d, keyed by derivative monomial.
template <typename R>
class DiffOp {
 public:
  using Terms = std::map<Monomial, Poly<R>>;

  DiffOp() = default;
  explicit DiffOp(const GradedSpace& sp) : sp_(sp) {}

  static DiffOp from_field(const VectorField<R>& X) {
    DiffOp op(X.space());
    for (std::size_t k = 0; k < X.space().dim(); ++k) op.add(Monomial::var(k), X[k]);
    return op;
  }
  static DiffOp multiplication(const Poly<R>& f) {
    DiffOp op(f.space());
    op.add(Monomial{}, f);
    return op;
  }

  const GradedSpace& space() const noexcept { return sp_; }
  const Terms& terms() const noexcept { return terms_; }
  bool is_zero() const noexcept { return terms_.empty(); }

  void add(Monomial d, const Poly<R>& c) {
    if (c.is_zero()) return;
    auto [it, inserted] = terms_.try_emplace(d, c);
    if (!inserted) {
      it->second += c;
      if (it->second.is_zero()) terms_.erase(it);
    }
  }

  friend DiffOp operator+(DiffOp a, const DiffOp& b) {
    if (a.sp_.dim() == 0) a.sp_ = b.sp_;
    for (const auto& [d, c] : b.terms_) a.add(d, c);
    return a;
  }

  /// Apply to a polynomial.
  Poly<R> apply(const Poly<R>& f) const {
    Poly<R> out(sp_);
    for (const auto& [d, c] : terms_) {
      Poly<R> g = f;
      for (std::size_t k = 0; k < sp_.dim(); ++k)
        for (unsigned e = 0; e < d.exponent(k); ++e) g = g.derivative(k);
      out += c * g;
    }
    return out;
  }

  /// Composition A o B via Leibniz: a d^al (b d^be) = sum_{ga <= al} C(al, ga) a (d^{al-ga} b) d^{ga+be}.
  friend DiffOp compose(const DiffOp& A, const DiffOp& B) {
    DiffOp out(A.sp_);
    const std::size_t N = A.sp_.dim();
    for (const auto& [al, a] : A.terms_) {
      std::vector<unsigned> alv(N);
      for (std::size_t k = 0; k < N; ++k) alv[k] = al.exponent(k);
      std::vector<unsigned> ga(N, 0);
      while (true) {
        // binomial factor and the derivative al - ga applied to b
        long binom = 1;
        for (std::size_t k = 0; k < N; ++k) {
          long c = 1;
          for (unsigned j = 0; j < ga[k]; ++j) c = c * (alv[k] - j) / (j + 1);
          binom *= c;
        }
        Monomial gmono;
        for (std::size_t k = 0; k < N; ++k)
          if (ga[k]) gmono = gmono * Monomial::var(k, ga[k]);
        for (const auto& [be, b] : B.terms_) {
          Poly<R> db = b;
          for (std::size_t k = 0; k < N; ++k)
            for (unsigned e = ga[k]; e < alv[k]; ++e) db = db.derivative(k);
          if (db.is_zero()) continue;
          out.add(gmono * be, R(binom) * (a * db));
        }
        std::size_t k = 0;
        for (; k < N; ++k) {
          if (ga[k] < alv[k]) {
            ++ga[k];
            break;
          }
          ga[k] = 0;
        }
        if (k == N) break;
      }
    }
    return out;
  }

  /// Operator order of each term: weight(coefficient) - weight(derivative).
  std::vector<int> orders() const {
    std::vector<int> o;
    for (const auto& [d, c] : terms_)
      for (int w : c.weights()) o.push_back(w - d.weight(sp_));
    std::sort(o.begin(), o.end());
    o.erase(std::unique(o.begin(), o.end()), o.end());
    return o;
  }

  std::string to_string() const {
    std::ostringstream os;
    bool first = true;
    for (const auto& [d, c] : terms_) {
      if (!first) os << "\n";
      first = false;
      os << "[" << c.to_string() << "]";
      for (std::size_t k = 0; k < sp_.dim(); ++k)
        for (unsigned e = 0; e < d.exponent(k); ++e) os << " d/d" << sp_.name(k);
    }
    return first ? "0" : os.str();
  }

 private:
  GradedSpace sp_;
  Terms terms_;
};

/// Coefficients expressing a target frame in a reference frame E_b:
/// target_a = sum_b c_a^b E_b, split into homogeneous parts by function order.
/// coeff[a][b][p] is c_a^{b(p)}; nullopt when the coframe data does not reach it.
template <typename R>
using FrameCoefficients = std::vector<std::vector<std::vector<std::optional<Poly<R>>>>>;

/// One coframe element theta_c as homogeneous parts theta_c^{(k)}, k = weight .. known_through.
template <typename R>
struct CoframeSeries {
  std::map<int, Form<R>> parts;
  int known_through = 0;  // parts above this order are unknown (absent parts at or below are zero)
};

/// Solve theta_c(target_a) = delta_ac order by order, where the reference frame
/// E_b is dual to the lowest-order coframe parts. Recursion (function order p):
///   c_a^{c(p)} = delta_ac [p = 0] - sum_{k > w_c} sum_b c_a^{b(p - k + w_b)} theta_c^{(k)}(E_b).
template <typename R>
FrameCoefficients<R> frame_inversion(const std::vector<VectorField<R>>& frame,
                                     const std::vector<CoframeSeries<R>>& coframe, int max_order = 4) {
  const std::size_t N = frame.size();
  if (coframe.size() != N) throw InputError("frame and coframe sizes differ");
  if (N == 0) return {};
  const GradedSpace sp = frame.front().space();
  auto w = [&](std::size_t c) { return sp.weight(c); };
  // lowest-order duality
  for (std::size_t c = 0; c < N; ++c) {
    auto it = coframe[c].parts.find(w(c));
    for (std::size_t b = 0; b < N; ++b) {
      Poly<R> v = it == coframe[c].parts.end() ? Poly<R>(sp) : pair(it->second, frame[b]);
      Poly<R> expect = Poly<R>::constant(sp, R(c == b ? 1 : 0));
      if (!(v == expect)) throw InputError("frame and coframe are not dual at lowest order");
    }
    for (const auto& [k, f] : coframe[c].parts)
      if (k < w(c) && !f.is_zero()) throw InputError("coframe has terms below its weight");
  }
  // theta_c^{(k)}(E_b), cached; nullopt when unknown.
  std::map<std::tuple<std::size_t, int, std::size_t>, std::optional<Poly<R>>> cache;
  auto theta_on = [&](std::size_t c, int k, std::size_t b) -> const std::optional<Poly<R>>& {
    auto key = std::make_tuple(c, k, b);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
    std::optional<Poly<R>> v;
    if (k <= coframe[c].known_through) {
      auto f = coframe[c].parts.find(k);
      v = f == coframe[c].parts.end() ? Poly<R>(sp) : pair(f->second, frame[b]);
    }
    return cache.emplace(key, std::move(v)).first->second;
  };
  FrameCoefficients<R> out(N, std::vector<std::vector<std::optional<Poly<R>>>>(
                                  N, std::vector<std::optional<Poly<R>>>(max_order + 1)));
  std::vector<std::size_t> order_c;  // vertical first, then horizontal
  for (std::size_t c = sp.m; c < N; ++c) order_c.push_back(c);
  for (std::size_t c = 0; c < sp.m; ++c) order_c.push_back(c);
  for (std::size_t a = 0; a < N; ++a)
    for (int p = 0; p <= max_order; ++p)
      for (std::size_t c : order_c) {
        std::optional<Poly<R>> acc = Poly<R>::constant(sp, R(a == c && p == 0 ? 1 : 0));
        for (std::size_t b = 0; b < N && acc; ++b)
          for (int k = w(c) + 1; k <= p + w(b) && acc; ++k) {
            int q = p - k + w(b);
            const auto& cab = out[a][b][q];
            if (cab && cab->is_zero()) continue;
            const auto& th = theta_on(c, k, b);
            if (th && th->is_zero()) continue;
            if (!cab || !th) {
              acc.reset();
              break;
            }
            *acc -= *cab * *th;
          }
        out[a][c][p] = std::move(acc);
      }
  return out;
}

}  // namespace qcheat
