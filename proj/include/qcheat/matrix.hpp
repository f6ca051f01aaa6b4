#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <type_traits>
#include <vector>

#include "qcheat/error.hpp"

namespace qcheat {

/// Small dense row-major matrix over an exact or floating scalar.
template <typename T>
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, const T& fill = T(0))
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix identity(std::size_t n) {
    Matrix id(n, n);
    for (std::size_t i = 0; i < n; ++i) id(i, i) = T(1);
    return id;
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

  T& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  const T& operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  Matrix transpose() const {
    Matrix t(cols_, rows_);
    for (std::size_t r = 0; r < rows_; ++r)
      for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
    return t;
  }

  friend Matrix operator*(const Matrix& a, const Matrix& b) {
    if (a.cols_ != b.rows_) throw InputError("matrix product dimension mismatch");
    Matrix p(a.rows_, b.cols_);
    for (std::size_t i = 0; i < a.rows_; ++i)
      for (std::size_t k = 0; k < a.cols_; ++k) {
        if (a(i, k) == T(0)) continue;
        for (std::size_t j = 0; j < b.cols_; ++j) p(i, j) += a(i, k) * b(k, j);
      }
    return p;
  }
  friend Matrix operator+(Matrix a, const Matrix& b) {
    for (std::size_t i = 0; i < a.data_.size(); ++i) a.data_[i] += b.data_[i];
    return a;
  }
  friend Matrix operator*(const T& s, Matrix a) {
    for (auto& v : a.data_) v *= s;
    return a;
  }
  friend Matrix operator-(const Matrix& a) { return T(-1) * a; }
  friend bool operator==(const Matrix& a, const Matrix& b) {
    return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
  }

  bool is_skew() const {
    if (rows_ != cols_) return false;
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = 0; j < cols_; ++j)
        if ((*this)(i, j) != -(*this)(j, i)) return false;
    return true;
  }

  template <typename U>
  Matrix<U> cast() const {
    Matrix<U> out(rows_, cols_);
    for (std::size_t r = 0; r < rows_; ++r)
      for (std::size_t c = 0; c < cols_; ++c) {
        if constexpr (std::is_same_v<U, double> && !std::is_arithmetic_v<T>)
          out(r, c) = (*this)(r, c).template convert_to<double>();
        else
          out(r, c) = static_cast<U>((*this)(r, c));
      }
    return out;
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<T> data_;
};

namespace detail {
template <typename T>
bool negligible(const T& v) {
  if constexpr (std::is_floating_point_v<T>)
    return std::abs(v) < 1e-13;
  else
    return v == T(0);
}
template <typename T>
auto magnitude(const T& v) {
  if constexpr (std::is_floating_point_v<T>)
    return std::abs(v);
  else
    return v < T(0) ? T(-v) : v;
}
}  // namespace detail

/// Determinant by Gaussian elimination (partial pivoting for floating T).
template <typename T>
T determinant(Matrix<T> a) {
  if (a.rows() != a.cols()) throw InputError("determinant of non-square matrix");
  const std::size_t n = a.rows();
  T det(1);
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (detail::magnitude(a(r, col)) > detail::magnitude(a(piv, col))) piv = r;
    if (a(piv, col) == T(0)) return T(0);
    if (piv != col) {
      for (std::size_t c = 0; c < n; ++c) std::swap(a(piv, c), a(col, c));
      det = -det;
    }
    det *= a(col, col);
    for (std::size_t r = col + 1; r < n; ++r) {
      if (a(r, col) == T(0)) continue;
      T f = a(r, col) / a(col, col);
      for (std::size_t c = col; c < n; ++c) a(r, c) -= f * a(col, c);
    }
  }
  return det;
}

/// One nonzero vector v with a v = 0, or nullopt when a is nonsingular.
template <typename T>
std::optional<std::vector<T>> null_vector(Matrix<T> a) {
  const std::size_t rows = a.rows(), cols = a.cols();
  std::vector<std::size_t> pivot_col;
  std::size_t r = 0;
  for (std::size_t c = 0; c < cols && r < rows; ++c) {
    std::size_t piv = r;
    for (std::size_t i = r + 1; i < rows; ++i)
      if (detail::magnitude(a(i, c)) > detail::magnitude(a(piv, c))) piv = i;
    if (detail::negligible(a(piv, c))) continue;
    for (std::size_t k = 0; k < cols; ++k) std::swap(a(piv, k), a(r, k));
    T inv = T(1) / a(r, c);
    for (std::size_t k = 0; k < cols; ++k) a(r, k) *= inv;
    for (std::size_t i = 0; i < rows; ++i) {
      if (i == r || a(i, c) == T(0)) continue;
      T f = a(i, c);
      for (std::size_t k = 0; k < cols; ++k) a(i, k) -= f * a(r, k);
    }
    pivot_col.push_back(c);
    ++r;
  }
  if (pivot_col.size() == cols) return std::nullopt;
  std::size_t free_col = 0;
  for (std::size_t c = 0, p = 0; c < cols; ++c) {
    if (p < pivot_col.size() && pivot_col[p] == c) {
      ++p;
      continue;
    }
    free_col = c;
    break;
  }
  std::vector<T> v(cols, T(0));
  v[free_col] = T(1);
  for (std::size_t p = 0; p < pivot_col.size(); ++p) v[pivot_col[p]] = -a(p, free_col);
  return v;
}

}  // namespace qcheat
