#pragma once

#include <initializer_list>
#include <optional>
#include <utility>
#include <vector>

namespace attrakt {

struct PolySystem;

namespace linalg {

/// Dense row-major matrix.
class Matrix {
 public:
  Matrix() = default;
  Matrix(int rows, int cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(static_cast<std::size_t>(rows) * cols, fill) {}
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  static Matrix Identity(int n);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  double& operator()(int r, int c) { return data_[static_cast<std::size_t>(r) * cols_ + c]; }
  double operator()(int r, int c) const { return data_[static_cast<std::size_t>(r) * cols_ + c]; }

  Matrix Transpose() const;
  friend Matrix operator*(const Matrix& a, const Matrix& b);
  friend Matrix operator+(const Matrix& a, const Matrix& b);
  friend Matrix operator-(const Matrix& a, const Matrix& b);
  double MaxAbs() const;

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<double> data_;
};

/// Symmetric matrix in packed lower-triangle storage.
class SymMatrix {
 public:
  SymMatrix() = default;
  explicit SymMatrix(int dim) : dim_(dim), data_(static_cast<std::size_t>(dim) * (dim + 1) / 2, 0.0) {}
  /// Symmetrizes (M + M^T) / 2.
  static SymMatrix FromDense(const Matrix& m);
  static SymMatrix Identity(int n);

  int dim() const { return dim_; }
  double& operator()(int r, int c) { return data_[Index(r, c)]; }
  double operator()(int r, int c) const { return data_[Index(r, c)]; }
  Matrix ToDense() const;

 private:
  std::size_t Index(int r, int c) const {
    if (r < c) std::swap(r, c);
    return static_cast<std::size_t>(r) * (r + 1) / 2 + c;
  }
  int dim_ = 0;
  std::vector<double> data_;
};

/// Lower-triangular L with L L^T = M, or nullopt when M is not positive
/// definite (a pivot is not strictly positive).
std::optional<Matrix> Cholesky(const SymMatrix& m);

/// Solves A x = b by LU with partial pivoting. nullopt when a pivot is below
/// rel_pivot_tol times the largest entry of A.
std::optional<std::vector<double>> LuSolve(Matrix a, std::vector<double> b,
                                           double rel_pivot_tol = 1e-12);

struct EigenDecomposition {
  std::vector<double> values;  // ascending
  Matrix vectors;              // column k pairs with values[k]
};

/// Cyclic Jacobi rotations until the off-diagonal Frobenius norm drops below
/// tol times the Frobenius norm of M.
EigenDecomposition JacobiEigen(const SymMatrix& m, double tol = 1e-12, int max_sweeps = 100);
double MinEigenvalue(const SymMatrix& m);

/// Solution of A^T P + P A = -I via Kronecker vectorization, or nullopt
/// (not Hurwitz) when the vectorized system is singular or P is not positive
/// definite.
std::optional<SymMatrix> SolveLyapunov(const Matrix& a);

/// Jacobian of f at the origin: A(i, j) = coefficient of x_j in f_i.
Matrix Linearize(const PolySystem& sys);

}  // namespace linalg
}  // namespace attrakt
