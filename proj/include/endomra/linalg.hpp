// Dense linear algebra over exact fields (Rational, Algebraic).
#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

#include "endomra/exact.hpp"

namespace endomra {

template <typename T>
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, T(0)) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  T& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  const T& operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = T(1);
    return m;
  }

  friend Matrix operator-(const Matrix& a, const Matrix& b) {
    Matrix out(a.rows_, a.cols_);
    for (std::size_t i = 0; i < a.data_.size(); ++i) out.data_[i] = a.data_[i] - b.data_[i];
    return out;
  }

  std::vector<T> apply(const std::vector<T>& v) const {
    if (v.size() != cols_) throw std::invalid_argument("dimension mismatch");
    std::vector<T> out(rows_, T(0));
    for (std::size_t r = 0; r < rows_; ++r)
      for (std::size_t c = 0; c < cols_; ++c)
        if (!is_zero_value((*this)(r, c))) out[r] += (*this)(r, c) * v[c];
    return out;
  }

  static bool is_zero_value(const T& v) {
    if constexpr (requires { v.is_zero(); })
      return v.is_zero();
    else
      return v == 0;
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<T> data_;
};

/// In-place reduced row echelon form; returns the pivot column of each pivot row.
template <typename T>
std::vector<std::size_t> row_reduce(Matrix<T>& m) {
  std::vector<std::size_t> pivots;
  std::size_t row = 0;
  for (std::size_t col = 0; col < m.cols() && row < m.rows(); ++col) {
    std::size_t pick = row;
    while (pick < m.rows() && Matrix<T>::is_zero_value(m(pick, col))) ++pick;
    if (pick == m.rows()) continue;
    if (pick != row)
      for (std::size_t c = 0; c < m.cols(); ++c) std::swap(m(pick, c), m(row, c));
    T inv = T(1) / m(row, col);
    for (std::size_t c = col; c < m.cols(); ++c) m(row, c) = m(row, c) * inv;
    for (std::size_t r = 0; r < m.rows(); ++r) {
      if (r == row || Matrix<T>::is_zero_value(m(r, col))) continue;
      T factor = m(r, col);
      for (std::size_t c = col; c < m.cols(); ++c) m(r, c) = m(r, c) - factor * m(row, c);
    }
    pivots.push_back(col);
    ++row;
  }
  return pivots;
}

/// Basis of {v : m v = 0}; each basis vector has a 1 in its free coordinate.
template <typename T>
std::vector<std::vector<T>> nullspace(Matrix<T> m) {
  auto pivots = row_reduce(m);
  std::vector<bool> is_pivot(m.cols(), false);
  for (auto p : pivots) is_pivot[p] = true;
  std::vector<std::vector<T>> basis;
  for (std::size_t free = 0; free < m.cols(); ++free) {
    if (is_pivot[free]) continue;
    std::vector<T> v(m.cols(), T(0));
    v[free] = T(1);
    for (std::size_t r = 0; r < pivots.size(); ++r) v[pivots[r]] = -m(r, free);
    basis.push_back(std::move(v));
  }
  return basis;
}

/// Solves m x = rhs; throws when inconsistent or underdetermined.
template <typename T, typename V>
std::vector<V> solve_unique(const Matrix<T>& m, const std::vector<V>& rhs) {
  if (rhs.size() != m.rows()) throw std::invalid_argument("dimension mismatch");
  const std::size_t n = m.cols();
  Matrix<T> aug(m.rows(), n);
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t c = 0; c < n; ++c) aug(r, c) = m(r, c);
  std::vector<V> b = rhs;
  std::size_t row = 0;
  std::vector<std::size_t> pivots;
  for (std::size_t col = 0; col < n && row < aug.rows(); ++col) {
    std::size_t pick = row;
    while (pick < aug.rows() && Matrix<T>::is_zero_value(aug(pick, col))) ++pick;
    if (pick == aug.rows()) continue;
    if (pick != row) {
      for (std::size_t c = 0; c < n; ++c) std::swap(aug(pick, c), aug(row, c));
      std::swap(b[pick], b[row]);
    }
    T inv = T(1) / aug(row, col);
    for (std::size_t c = col; c < n; ++c) aug(row, c) = aug(row, c) * inv;
    b[row] = b[row] * V(inv);
    for (std::size_t r = 0; r < aug.rows(); ++r) {
      if (r == row || Matrix<T>::is_zero_value(aug(r, col))) continue;
      T factor = aug(r, col);
      for (std::size_t c = col; c < n; ++c) aug(r, c) = aug(r, c) - factor * aug(row, c);
      b[r] = b[r] - V(factor) * b[row];
    }
    pivots.push_back(col);
    ++row;
  }
  for (std::size_t r = row; r < aug.rows(); ++r)
    if (!(b[r] == V(0))) throw std::domain_error("inconsistent linear system");
  if (pivots.size() != n) throw std::domain_error("linear system has no unique solution");
  std::vector<V> x(n, V(0));
  for (std::size_t r = 0; r < pivots.size(); ++r) x[pivots[r]] = b[r];
  return x;
}

}  // namespace endomra
