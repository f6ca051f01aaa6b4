#pragma once

// Step-two Carnot groups in exponential coordinates, with the quaternionic
// Heisenberg group of level n as the distinguished case.
//
// Structure constants J^i_{ab} are stored exactly. The group law is
//   x'' = x + x',   z''_i = z_i + z'_i + 2 sum_{a,b} J^i_{ab} x_a x'_b
// and the left-invariant horizontal frame is
//   X_a = d/dx_a + 2 sum_{b,i} J^i_{ba} x_b d/dz_i,   V_i = 2 d/dz_i.
// so [X_a, X_b] = 2 sum_i J^i_{ab} V_i and the torsion is T^i_{ab} = -2 J^i_{ab}.

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "json.hpp"
#include "qcheat/error.hpp"
#include "qcheat/matrix.hpp"
#include "qcheat/rational.hpp"

namespace qcheat {

/// Density of the nilpotentized Popp measure against Lebesgue measure,
/// kept as (det B)^{-1/2} with det B exact.
struct HaarDensity {
  Rational det_b;  // determinant of B_ij = sum_{ab} (4J^i_{ab})(4J^j_{ab})

  double value() const { return 1.0 / std::sqrt(to_double(det_b)); }
  Rational squared() const { return Rational(1) / det_b; }
};

class GroupSpec {
 public:
  /// Generic step-two spec. Every J^i must be skew-symmetric and m x m.
  GroupSpec(std::size_t m, std::vector<Matrix<Rational>> j, unsigned level = 0)
      : m_(m), level_(level), j_(std::move(j)) {
    if (m_ == 0) throw InputError("horizontal dimension must be positive");
    if (j_.empty()) throw InputError("at least one structure matrix is required");
    for (std::size_t i = 0; i < j_.size(); ++i) {
      if (j_[i].rows() != m_ || j_[i].cols() != m_)
        throw InputError("structure matrix " + std::to_string(i + 1) + " has wrong shape");
      if (!j_[i].is_skew())
        throw InvariantViolation("structure matrix " + std::to_string(i + 1) + " is not skew-symmetric");
      jd_.push_back(j_[i].template cast<double>());
    }
    if (level_ != 0 && !satisfies_quaternionic_relations())
      throw InvariantViolation("structure matrices violate the quaternionic relations");
  }

  std::size_t horizontal_dim() const noexcept { return m_; }
  std::size_t vertical_dim() const noexcept { return j_.size(); }
  std::size_t dim() const noexcept { return m_ + j_.size(); }
  /// Homogeneous (Hausdorff) dimension m + 2r.
  std::size_t homogeneous_dim() const noexcept { return m_ + 2 * j_.size(); }
  /// Quaternionic level n, or 0 for a generic spec.
  unsigned level() const noexcept { return level_; }
  bool is_quaternionic() const noexcept { return level_ != 0; }

  const std::vector<Matrix<Rational>>& structure() const noexcept { return j_; }
  const Matrix<Rational>& structure(std::size_t i) const { return j_.at(i); }
  const Matrix<double>& structure_double(std::size_t i) const { return jd_.at(i); }

  /// b^i_{ab} = -2 J^i_{ab}: [X_a, X_b] = 2 J^i_{ab} V_i, so these are the
  /// torsion components T(X_a, X_b) = -[X_a, X_b] along V_i.
  std::vector<Matrix<Rational>> bracket_constants() const {
    std::vector<Matrix<Rational>> b;
    for (const auto& ji : j_) b.push_back(Rational(-2) * ji);
    return b;
  }

  HaarDensity haar() const {
    const std::size_t r = j_.size();
    Matrix<Rational> big_b(r, r);
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t k = 0; k < r; ++k) {
        Rational s = 0;
        for (std::size_t a = 0; a < m_; ++a)
          for (std::size_t b = 0; b < m_; ++b) s += j_[i](a, b) * j_[k](a, b);
        big_b(i, k) = 16 * s;
      }
    Rational det = determinant(big_b);
    if (det == 0) throw InvariantViolation("structure matrices are linearly dependent; no Haar density");
    return HaarDensity{det};
  }

  /// (J^i)^2 = -Id, J^i J^k + J^k J^i = 0 for i != k, and, when r = 3, the
  /// triple product. Entries are g(I_i X_a, X_b), i.e. the transposes of the
  /// operator matrices, so I_1 I_2 I_3 = -Id reads J^3 J^2 J^1 = -Id here.
  bool satisfies_quaternionic_relations() const {
    const auto id = Matrix<Rational>::identity(m_);
    const Matrix<Rational> zero(m_, m_);
    for (std::size_t i = 0; i < j_.size(); ++i) {
      if (!(j_[i] * j_[i] == -id)) return false;
      for (std::size_t k = i + 1; k < j_.size(); ++k)
        if (!(j_[i] * j_[k] + j_[k] * j_[i] == zero)) return false;
    }
    if (j_.size() == 3 && !(j_[2] * j_[1] * j_[0] == -id)) return false;
    return j_.size() == 3;
  }

  /// H-type condition: every J^i squares to -Id and distinct ones anticommute.
  /// The heat kernel reduces to a one-dimensional radial integral exactly then.
  bool is_h_type() const {
    const auto id = Matrix<Rational>::identity(m_);
    const Matrix<Rational> zero(m_, m_);
    if (m_ % 2 != 0) return false;
    for (std::size_t i = 0; i < j_.size(); ++i) {
      if (!(j_[i] * j_[i] == -id)) return false;
      for (std::size_t k = i + 1; k < j_.size(); ++k)
        if (!(j_[i] * j_[k] + j_[k] * j_[i] == zero)) return false;
    }
    return true;
  }

 private:
  std::size_t m_;
  unsigned level_;
  std::vector<Matrix<Rational>> j_;
  std::vector<Matrix<double>> jd_;
};

/// The quaternionic Heisenberg group of level n: J^i acts on each 4-block of
/// R^{4n} through I_i X_{4k+1} = X_{4k+i+1} completed by the quaternion
/// multiplication table (I_1 I_2 = I_3).
inline GroupSpec make_quaternionic_spec(unsigned n) {
  if (n == 0) throw InputError("quaternionic level n must be at least 1");
  const std::size_t m = 4 * static_cast<std::size_t>(n);
  // (row, col, sign) inside one 4x4 block, entry = g(I_i X_row, X_col).
  struct Entry {
    int row, col, sign;
  };
  const Entry blocks[3][4] = {
      {{0, 1, 1}, {1, 0, -1}, {2, 3, 1}, {3, 2, -1}},
      {{0, 2, 1}, {1, 3, -1}, {2, 0, -1}, {3, 1, 1}},
      {{0, 3, 1}, {1, 2, 1}, {2, 1, -1}, {3, 0, -1}},
  };
  std::vector<Matrix<Rational>> j(3, Matrix<Rational>(m, m));
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t k = 0; k < n; ++k)
      for (const auto& e : blocks[i]) j[i](4 * k + e.row, 4 * k + e.col) = e.sign;
  return GroupSpec(m, std::move(j), n);
}

/// The first Heisenberg group: m = 2, one vertical direction.
inline GroupSpec make_heisenberg_spec() {
  Matrix<Rational> j(2, 2);
  j(0, 1) = 1;
  j(1, 0) = -1;
  return GroupSpec(2, {j});
}

template <typename T>
struct GroupPoint {
  std::vector<T> x;
  std::vector<T> z;

  friend bool operator==(const GroupPoint&, const GroupPoint&) = default;
};

template <typename T>
GroupPoint<T> identity_point(const GroupSpec& spec) {
  return {std::vector<T>(spec.horizontal_dim(), T(0)), std::vector<T>(spec.vertical_dim(), T(0))};
}

namespace detail {
template <typename T>
void check_dims(const GroupSpec& spec, const GroupPoint<T>& h) {
  if (h.x.size() != spec.horizontal_dim() || h.z.size() != spec.vertical_dim())
    throw InputError("group point has dimensions (" + std::to_string(h.x.size()) + ", " +
                     std::to_string(h.z.size()) + "), spec expects (" +
                     std::to_string(spec.horizontal_dim()) + ", " + std::to_string(spec.vertical_dim()) + ")");
}
template <typename T>
const auto& structure_for(const GroupSpec& spec, std::size_t i) {
  if constexpr (std::is_same_v<T, double>)
    return spec.structure_double(i);
  else
    return spec.structure(i);
}
}  // namespace detail

/// Sum over (a, b) of J^i_{ab} u_a v_b.
template <typename T>
T structure_form(const GroupSpec& spec, std::size_t i, const std::vector<T>& u, const std::vector<T>& v) {
  const auto& ji = detail::structure_for<T>(spec, i);
  T s(0);
  for (std::size_t a = 0; a < u.size(); ++a) {
    if (u[a] == T(0)) continue;
    for (std::size_t b = 0; b < v.size(); ++b)
      if (ji(a, b) != 0) s += T(ji(a, b)) * u[a] * v[b];
  }
  return s;
}

template <typename T>
GroupPoint<T> group_mul(const GroupSpec& spec, const GroupPoint<T>& h, const GroupPoint<T>& hp) {
  detail::check_dims(spec, h);
  detail::check_dims(spec, hp);
  GroupPoint<T> out = h;
  for (std::size_t a = 0; a < out.x.size(); ++a) out.x[a] += hp.x[a];
  for (std::size_t i = 0; i < out.z.size(); ++i)
    out.z[i] += hp.z[i] + T(2) * structure_form(spec, i, h.x, hp.x);
  return out;
}

template <typename T>
GroupPoint<T> group_inverse(const GroupSpec& spec, const GroupPoint<T>& h) {
  detail::check_dims(spec, h);
  GroupPoint<T> out = h;
  for (auto& v : out.x) v = -v;
  for (auto& v : out.z) v = -v;
  return out;
}

/// delta_lambda(x, z) = (lambda x, lambda^2 z).
template <typename T>
GroupPoint<T> dilate(const GroupSpec& spec, const T& lambda, const GroupPoint<T>& h) {
  if (!(lambda > T(0))) throw InputError("dilation factor must be positive");
  detail::check_dims(spec, h);
  GroupPoint<T> out = h;
  for (auto& v : out.x) v *= lambda;
  for (auto& v : out.z) v *= lambda * lambda;
  return out;
}

/// {"n": level, "m": m, "r": r, "J": [[["p/q", ...], ...], ...]}
inline nlohmann::json to_json(const GroupSpec& spec) {
  nlohmann::json j;
  j["n"] = spec.level();
  j["m"] = spec.horizontal_dim();
  j["r"] = spec.vertical_dim();
  auto& mats = j["J"] = nlohmann::json::array();
  for (const auto& ji : spec.structure()) {
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t a = 0; a < ji.rows(); ++a) {
      nlohmann::json row = nlohmann::json::array();
      for (std::size_t b = 0; b < ji.cols(); ++b) row.push_back(to_string(ji(a, b)));
      rows.push_back(std::move(row));
    }
    mats.push_back(std::move(rows));
  }
  return j;
}

inline GroupSpec group_spec_from_json(const nlohmann::json& j) {
  try {
    const std::size_t m = j.at("m").get<std::size_t>();
    const unsigned level = j.value("n", 0u);
    std::vector<Matrix<Rational>> mats;
    for (const auto& jm : j.at("J")) {
      if (jm.size() != m) throw InputError("structure matrix has wrong number of rows");
      Matrix<Rational> mat(m, m);
      for (std::size_t a = 0; a < m; ++a) {
        if (jm[a].size() != m) throw InputError("structure matrix has wrong number of columns");
        for (std::size_t b = 0; b < m; ++b) {
          const auto& e = jm[a][b];
          mat(a, b) = e.is_string() ? parse_rational(e.get<std::string>()) : Rational(e.get<long>());
        }
      }
      mats.push_back(std::move(mat));
    }
    if (j.contains("r") && j.at("r").get<std::size_t>() != mats.size())
      throw InputError("r does not match the number of structure matrices");
    return GroupSpec(m, std::move(mats), level);
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("malformed group spec: ") + e.what());
  }
}

}  // namespace qcheat
