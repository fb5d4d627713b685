// matrix.hpp
// Dense row-major complex matrices sized for desk-scale problems, plus the
// numerics the rest of the library leans on: conjugate transpose, products,
// Gram-Schmidt completion of orthonormal column sets, and Hermitian
// eigendecomposition (delegated to Eigen's self-adjoint solver).

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "qbnet/core.hpp"

namespace qbnet {

struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<Cx> a;  // row-major, size rows*cols

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), a(r * c, Cx{0.0, 0.0}) {}

  Cx& at(std::size_t r, std::size_t c) { return a[r * cols + c]; }
  const Cx& at(std::size_t r, std::size_t c) const { return a[r * cols + c]; }

  static Matrix zero(std::size_t r, std::size_t c) { return Matrix(r, c); }

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m.at(i, i) = Cx{1.0, 0.0};
    return m;
  }

  bool square() const { return rows == cols; }
};

inline Matrix dagger(const Matrix& m) {
  Matrix out(m.cols, m.rows);
  for (std::size_t r = 0; r < m.rows; ++r)
    for (std::size_t c = 0; c < m.cols; ++c) out.at(c, r) = std::conj(m.at(r, c));
  return out;
}

inline Matrix operator*(const Matrix& x, const Matrix& y) {
  if (x.cols != y.rows)
    throw Error(ErrorKind::DimensionMismatch, "matrix product: inner dimensions differ");
  Matrix out(x.rows, y.cols);
  for (std::size_t r = 0; r < x.rows; ++r)
    for (std::size_t k = 0; k < x.cols; ++k) {
      const Cx xv = x.at(r, k);
      if (xv == Cx{0.0, 0.0}) continue;
      for (std::size_t c = 0; c < y.cols; ++c) out.at(r, c) += xv * y.at(k, c);
    }
  return out;
}

inline Matrix operator+(const Matrix& x, const Matrix& y) {
  if (x.rows != y.rows || x.cols != y.cols)
    throw Error(ErrorKind::DimensionMismatch, "matrix sum: shapes differ");
  Matrix out = x;
  for (std::size_t i = 0; i < out.a.size(); ++i) out.a[i] += y.a[i];
  return out;
}

inline Matrix operator-(const Matrix& x, const Matrix& y) {
  if (x.rows != y.rows || x.cols != y.cols)
    throw Error(ErrorKind::DimensionMismatch, "matrix difference: shapes differ");
  Matrix out = x;
  for (std::size_t i = 0; i < out.a.size(); ++i) out.a[i] -= y.a[i];
  return out;
}

inline Matrix operator*(Cx s, const Matrix& m) {
  Matrix out = m;
  for (auto& v : out.a) v *= s;
  return out;
}

inline Cx trace(const Matrix& m) {
  if (!m.square()) throw Error(ErrorKind::DimensionMismatch, "trace of non-square matrix");
  Cx t{0.0, 0.0};
  for (std::size_t i = 0; i < m.rows; ++i) t += m.at(i, i);
  return t;
}

inline double max_abs(const Matrix& m) {
  double worst = 0.0;
  for (const Cx& v : m.a) worst = std::max(worst, std::abs(v));
  return worst;
}

inline double max_abs_diff(const Matrix& x, const Matrix& y) {
  if (x.rows != y.rows || x.cols != y.cols)
    throw Error(ErrorKind::DimensionMismatch, "max_abs_diff: shapes differ");
  double worst = 0.0;
  for (std::size_t i = 0; i < x.a.size(); ++i) worst = std::max(worst, std::abs(x.a[i] - y.a[i]));
  return worst;
}

inline bool is_hermitian(const Matrix& m, double tol = default_tol) {
  if (!m.square()) return false;
  for (std::size_t r = 0; r < m.rows; ++r)
    for (std::size_t c = r; c < m.cols; ++c)
      if (std::abs(m.at(r, c) - std::conj(m.at(c, r))) > tol) return false;
  return true;
}

namespace detail {

inline Eigen::MatrixXcd to_eigen(const Matrix& m) {
  Eigen::MatrixXcd out(static_cast<Eigen::Index>(m.rows), static_cast<Eigen::Index>(m.cols));
  for (std::size_t r = 0; r < m.rows; ++r)
    for (std::size_t c = 0; c < m.cols; ++c)
      out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = m.at(r, c);
  return out;
}

}  // namespace detail

// Eigenvalues of a Hermitian matrix, ascending. Throws NotHermitian when the
// input fails the Hermiticity check at `tol`.
inline std::vector<double> hermitian_eigenvalues(const Matrix& m, double tol = default_tol) {
  if (!is_hermitian(m, tol))
    throw Error(ErrorKind::NotHermitian, "eigenvalues requested for a non-Hermitian matrix");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(detail::to_eigen(m),
                                                         Eigen::EigenvaluesOnly);
  std::vector<double> vals(m.rows);
  for (std::size_t i = 0; i < m.rows; ++i)
    vals[i] = solver.eigenvalues()(static_cast<Eigen::Index>(i));
  return vals;
}

struct EigenSystem {
  std::vector<double> values;  // ascending
  Matrix vectors;              // column i pairs with values[i]
};

inline EigenSystem hermitian_eigensystem(const Matrix& m, double tol = default_tol) {
  if (!is_hermitian(m, tol))
    throw Error(ErrorKind::NotHermitian, "eigensystem requested for a non-Hermitian matrix");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(detail::to_eigen(m));
  EigenSystem sys;
  sys.values.resize(m.rows);
  sys.vectors = Matrix(m.rows, m.rows);
  for (std::size_t i = 0; i < m.rows; ++i)
    sys.values[i] = solver.eigenvalues()(static_cast<Eigen::Index>(i));
  for (std::size_t r = 0; r < m.rows; ++r)
    for (std::size_t c = 0; c < m.rows; ++c)
      sys.vectors.at(r, c) =
          solver.eigenvectors()(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
  return sys;
}

// True when m is Hermitian (within tol) with every eigenvalue >= -tol.
// Throws NotHermitian instead of silently answering false on a skewed input.
inline bool is_psd(const Matrix& m, double tol = default_tol) {
  std::vector<double> vals = hermitian_eigenvalues(m, tol);
  return vals.empty() || vals.front() >= -tol;
}

// Completes k orthonormal columns (given as an n-by-k matrix) to an n-by-n
// unitary. The input columns are copied into the first k output columns
// unchanged. Remaining columns come from orthogonalizing the canonical basis
// vectors e_0, e_1, ... in index order against everything placed so far,
// skipping candidates whose residual norm falls below 1e-8, and fixing each
// survivor's phase so its first entry larger than 1e-12 in magnitude is real
// and non-negative. The procedure is fully deterministic.
inline Matrix gram_schmidt_extend(const Matrix& columns,
                                  double input_tol = orthonormal_input_tol) {
  const std::size_t n = columns.rows;
  const std::size_t k = columns.cols;
  if (k > n)
    throw Error(ErrorKind::DimensionMismatch, "more columns than rows to extend");

  // The supplied columns must already be orthonormal (within input_tol).
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = i; j < k; ++j) {
      Cx g{0.0, 0.0};
      for (std::size_t r = 0; r < n; ++r) g += std::conj(columns.at(r, i)) * columns.at(r, j);
      const Cx want = (i == j) ? Cx{1.0, 0.0} : Cx{0.0, 0.0};
      if (std::abs(g - want) > input_tol)
        throw Error(ErrorKind::NotOrthonormalInput,
                    "supplied columns are not orthonormal within tolerance");
    }

  Matrix u(n, n);
  for (std::size_t c = 0; c < k; ++c)
    for (std::size_t r = 0; r < n; ++r) u.at(r, c) = columns.at(r, c);

  std::size_t filled = k;
  std::vector<Cx> v(n);
  for (std::size_t cand = 0; cand < n && filled < n; ++cand) {
    std::fill(v.begin(), v.end(), Cx{0.0, 0.0});
    v[cand] = Cx{1.0, 0.0};
    // Two orthogonalization passes keep the result orthogonal to working
    // precision even when the candidate is nearly dependent.
    for (int pass = 0; pass < 2; ++pass)
      for (std::size_t c = 0; c < filled; ++c) {
        Cx g{0.0, 0.0};
        for (std::size_t r = 0; r < n; ++r) g += std::conj(u.at(r, c)) * v[r];
        for (std::size_t r = 0; r < n; ++r) v[r] -= g * u.at(r, c);
      }
    double norm2 = 0.0;
    for (const Cx& x : v) norm2 += std::norm(x);
    const double norm = std::sqrt(norm2);
    if (norm < orthonormal_input_tol) continue;
    for (Cx& x : v) x /= norm;
    for (std::size_t r = 0; r < n; ++r)
      if (std::abs(v[r]) > phase_pivot_tol) {
        const Cx phase = std::conj(v[r]) / std::abs(v[r]);
        for (Cx& x : v) x *= phase;
        break;
      }
    for (std::size_t r = 0; r < n; ++r) u.at(r, filled) = v[r];
    ++filled;
  }
  if (filled < n)
    throw Error(ErrorKind::NotOrthonormalInput, "could not complete an orthonormal basis");
  return u;
}

}  // namespace qbnet
