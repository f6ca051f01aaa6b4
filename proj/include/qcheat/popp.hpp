#pragma once

// Popp measure of a step-two adapted frame at a point: B_ij = sum_ab b^i_ab b^j_ab
// and density (det B)^{-1/2} against theta_1 ^ ... ^ eta_k. Divergence of the
// horizontal frame from the structure functions c^a_{b alpha}.

#include <cmath>
#include <cstddef>
#include <optional>
#include <sstream>
#include <string>
#include <type_traits>
#include <vector>

#include "qcheat/error.hpp"
#include "qcheat/group.hpp"
#include "qcheat/matrix.hpp"
#include "qcheat/rational.hpp"

namespace qcheat {

/// c[a][b][alpha] = c^a_{b alpha}, the a-component of [X_b, X_alpha];
/// a, b range over the whole frame, alpha over the horizontal part.
template <typename C>
using StructureFunctions = std::vector<std::vector<std::vector<C>>>;

template <typename T, typename C = T>
struct AdaptedFrameData {
  std::size_t m = 0;
  std::size_t k = 0;
  std::vector<Matrix<T>> b;  // b[i](alpha, beta) = g([X_alpha, X_beta], V_i)
  std::optional<StructureFunctions<C>> c;

  void validate() const {
    if (m == 0 || k == 0) throw InputError("frame ranks must be positive");
    if (b.size() != k) throw InputError("expected " + std::to_string(k) + " bracket matrices");
    for (std::size_t i = 0; i < k; ++i) {
      if (b[i].rows() != m || b[i].cols() != m)
        throw InputError("bracket matrix " + std::to_string(i + 1) + " is not " + std::to_string(m) + "x" +
                         std::to_string(m));
      for (std::size_t p = 0; p < m; ++p)
        for (std::size_t q = p; q < m; ++q)
          if (!(b[i](p, q) == -b[i](q, p)))
            throw InvariantViolation("bracket matrix " + std::to_string(i + 1) + " is not antisymmetric at (" +
                                     std::to_string(p + 1) + "," + std::to_string(q + 1) + ")");
    }
    if (c) {
      const std::size_t N = m + k;
      if (c->size() != N) throw InputError("structure functions have wrong outer size");
      for (const auto& ca : *c) {
        if (ca.size() != N) throw InputError("structure functions have wrong middle size");
        for (const auto& cab : ca)
          if (cab.size() != m) throw InputError("structure functions have wrong inner size");
      }
    }
  }
};

/// Bracket data of a step-two group: b^i = -2 J^i.
inline AdaptedFrameData<Rational> adapted_frame_from_group(const GroupSpec& spec) {
  AdaptedFrameData<Rational> d;
  d.m = spec.horizontal_dim();
  d.k = spec.vertical_dim();
  d.b = spec.bracket_constants();
  return d;
}

template <typename T>
struct PoppDensity {
  Matrix<T> B;
  T det;
  double value;  // (det B)^{-1/2}
};

template <typename T, typename C>
Matrix<T> popp_matrix(const AdaptedFrameData<T, C>& data) {
  data.validate();
  Matrix<T> B(data.k, data.k);
  for (std::size_t i = 0; i < data.k; ++i)
    for (std::size_t j = i; j < data.k; ++j) {
      T s(0);
      for (std::size_t p = 0; p < data.m; ++p)
        for (std::size_t q = 0; q < data.m; ++q) s += data.b[i](p, q) * data.b[j](p, q);
      B(i, j) = s;
      B(j, i) = s;
    }
  return B;
}

/// Fails on singular B, naming a vertical direction the brackets do not reach.
template <typename T, typename C>
PoppDensity<T> popp_density(const AdaptedFrameData<T, C>& data) {
  Matrix<T> B = popp_matrix(data);
  T det = determinant(B);
  bool singular;
  if constexpr (std::is_floating_point_v<T>) {
    double scale = 0;
    for (std::size_t i = 0; i < data.k; ++i) scale = std::max(scale, std::abs(B(i, i)));
    singular = !(det > 1e-12 * std::pow(scale, static_cast<double>(data.k)));
  } else {
    singular = det == T(0);
  }
  if (singular) {
    std::ostringstream os;
    os << "B is singular; brackets do not reach the vertical direction (";
    if (auto v = null_vector(B)) {
      for (std::size_t i = 0; i < v->size(); ++i) {
        if (i) os << ", ";
        if constexpr (std::is_floating_point_v<T>)
          os << (*v)[i];
        else
          os << to_string((*v)[i]);
      }
    }
    os << ")";
    throw InvariantViolation(os.str());
  }
  double dv;
  if constexpr (std::is_floating_point_v<T>)
    dv = det;
  else
    dv = to_double(det);
  return {B, det, 1.0 / std::sqrt(dv)};
}

/// sum_a c^a_{a alpha} for every horizontal alpha.
template <typename T, typename C>
std::vector<C> divergence_terms(const AdaptedFrameData<T, C>& data) {
  data.validate();
  if (!data.c) throw InputError("structure functions c^a_{b alpha} are required for divergence terms");
  const auto& c = *data.c;
  std::vector<C> out;
  for (std::size_t alpha = 0; alpha < data.m; ++alpha) {
    C s = c[0][0][alpha];
    for (std::size_t a = 1; a < data.m + data.k; ++a) s += c[a][a][alpha];
    out.push_back(std::move(s));
  }
  return out;
}

/// Structure functions of a left-invariant group frame (X_a, V_i = 2 d/dz_i):
/// [X_a, X_b] = 2 J^i_{ab} V_i, all other brackets vanish.
inline StructureFunctions<Rational> group_structure_functions(const GroupSpec& spec) {
  const std::size_t m = spec.horizontal_dim(), N = spec.dim();
  StructureFunctions<Rational> c(N, std::vector<std::vector<Rational>>(N, std::vector<Rational>(m)));
  for (std::size_t i = 0; i < spec.vertical_dim(); ++i)
    for (std::size_t b = 0; b < m; ++b)
      for (std::size_t a = 0; a < m; ++a) c[m + i][b][a] = 2 * spec.structure(i)(b, a);
  return c;
}

}  // namespace qcheat
