#include "attrakt/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "attrakt/sysparse.hpp"

namespace attrakt::linalg {

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
  rows_ = static_cast<int>(rows.size());
  cols_ = rows_ == 0 ? 0 : static_cast<int>(rows.begin()->size());
  data_.reserve(static_cast<std::size_t>(rows_) * cols_);
  for (const auto& r : rows) {
    if (static_cast<int>(r.size()) != cols_) throw std::invalid_argument("ragged matrix literal");
    data_.insert(data_.end(), r.begin(), r.end());
  }
}

Matrix Matrix::Identity(int n) {
  Matrix m(n, n);
  for (int i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::Transpose() const {
  Matrix t(cols_, rows_);
  for (int r = 0; r < rows_; ++r)
    for (int c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
  return t;
}

Matrix operator*(const Matrix& a, const Matrix& b) {
  if (a.cols_ != b.rows_) throw std::invalid_argument("matrix product: shape mismatch");
  Matrix r(a.rows_, b.cols_);
  for (int i = 0; i < a.rows_; ++i)
    for (int k = 0; k < a.cols_; ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      for (int j = 0; j < b.cols_; ++j) r(i, j) += aik * b(k, j);
    }
  return r;
}

Matrix operator+(const Matrix& a, const Matrix& b) {
  if (a.rows_ != b.rows_ || a.cols_ != b.cols_) throw std::invalid_argument("matrix sum: shape mismatch");
  Matrix r = a;
  for (std::size_t i = 0; i < r.data_.size(); ++i) r.data_[i] += b.data_[i];
  return r;
}

Matrix operator-(const Matrix& a, const Matrix& b) {
  if (a.rows_ != b.rows_ || a.cols_ != b.cols_) throw std::invalid_argument("matrix difference: shape mismatch");
  Matrix r = a;
  for (std::size_t i = 0; i < r.data_.size(); ++i) r.data_[i] -= b.data_[i];
  return r;
}

double Matrix::MaxAbs() const {
  double m = 0.0;
  for (double v : data_) m = std::max(m, std::abs(v));
  return m;
}

SymMatrix SymMatrix::FromDense(const Matrix& m) {
  if (m.rows() != m.cols()) throw std::invalid_argument("SymMatrix from non-square matrix");
  SymMatrix s(m.rows());
  for (int r = 0; r < m.rows(); ++r)
    for (int c = 0; c <= r; ++c) s(r, c) = 0.5 * (m(r, c) + m(c, r));
  return s;
}

SymMatrix SymMatrix::Identity(int n) {
  SymMatrix s(n);
  for (int i = 0; i < n; ++i) s(i, i) = 1.0;
  return s;
}

Matrix SymMatrix::ToDense() const {
  Matrix m(dim_, dim_);
  for (int r = 0; r < dim_; ++r)
    for (int c = 0; c < dim_; ++c) m(r, c) = (*this)(r, c);
  return m;
}

std::optional<Matrix> Cholesky(const SymMatrix& m) {
  const int n = m.dim();
  Matrix l(n, n);
  for (int j = 0; j < n; ++j) {
    double d = m(j, j);
    for (int k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
    if (!(d > 0.0)) return std::nullopt;
    const double ljj = std::sqrt(d);
    l(j, j) = ljj;
    for (int i = j + 1; i < n; ++i) {
      double s = m(i, j);
      for (int k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      l(i, j) = s / ljj;
    }
  }
  return l;
}

std::optional<std::vector<double>> LuSolve(Matrix a, std::vector<double> b, double rel_pivot_tol) {
  const int n = a.rows();
  if (a.cols() != n || static_cast<int>(b.size()) != n) throw std::invalid_argument("LuSolve: shape mismatch");
  const double scale = std::max(a.MaxAbs(), 1e-300);
  for (int k = 0; k < n; ++k) {
    int piv = k;
    for (int i = k + 1; i < n; ++i) {
      if (std::abs(a(i, k)) > std::abs(a(piv, k))) piv = i;
    }
    if (std::abs(a(piv, k)) <= rel_pivot_tol * scale) return std::nullopt;
    if (piv != k) {
      for (int c = 0; c < n; ++c) std::swap(a(k, c), a(piv, c));
      std::swap(b[k], b[piv]);
    }
    for (int i = k + 1; i < n; ++i) {
      const double f = a(i, k) / a(k, k);
      if (f == 0.0) continue;
      for (int c = k; c < n; ++c) a(i, c) -= f * a(k, c);
      b[i] -= f * b[k];
    }
  }
  for (int i = n - 1; i >= 0; --i) {
    double s = b[i];
    for (int c = i + 1; c < n; ++c) s -= a(i, c) * b[c];
    b[i] = s / a(i, i);
  }
  return b;
}

EigenDecomposition JacobiEigen(const SymMatrix& m, double tol, int max_sweeps) {
  const int n = m.dim();
  Matrix a = m.ToDense();
  Matrix v = Matrix::Identity(n);
  double total = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) total += a(i, j) * a(i, j);
  const double threshold = tol * std::sqrt(total);

  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double off = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (i != j) off += a(i, j) * a(i, j);
    if (std::sqrt(off) <= threshold) break;

    for (int p = 0; p < n - 1; ++p) {
      for (int q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = std::copysign(1.0, theta) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (int k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (int k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (int k = 0; k < n; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int i, int j) { return a(i, i) < a(j, j); });
  EigenDecomposition out{std::vector<double>(n), Matrix(n, n)};
  for (int k = 0; k < n; ++k) {
    out.values[k] = a(order[k], order[k]);
    for (int r = 0; r < n; ++r) out.vectors(r, k) = v(r, order[k]);
  }
  return out;
}

double MinEigenvalue(const SymMatrix& m) {
  if (m.dim() == 0) return 0.0;
  return JacobiEigen(m).values.front();
}

std::optional<SymMatrix> SolveLyapunov(const Matrix& a) {
  const int n = a.rows();
  if (a.cols() != n) throw std::invalid_argument("SolveLyapunov: A must be square");
  // vec(A^T P + P A) = (I kron A^T + A^T kron I) vec(P), column-major vec.
  const int nn = n * n;
  Matrix k(nn, nn);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const int row = j * n + i;  // entry (i, j) of the result
      for (int l = 0; l < n; ++l) {
        k(row, j * n + l) += a(l, i);  // (A^T P)_ij = sum_l A_li P_lj
        k(row, l * n + i) += a(l, j);  // (P A)_ij = sum_l P_il A_lj
      }
    }
  }
  std::vector<double> rhs(nn, 0.0);
  for (int i = 0; i < n; ++i) rhs[i * n + i] = -1.0;
  auto sol = LuSolve(k, rhs, 1e-10);
  if (!sol) return std::nullopt;
  Matrix p(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) p(i, j) = (*sol)[j * n + i];
  SymMatrix ps = SymMatrix::FromDense(p);
  if (!Cholesky(ps)) return std::nullopt;
  return ps;
}

Matrix Linearize(const PolySystem& sys) {
  const int n = sys.nvars();
  Matrix a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = sys.f[i].coefficient(Monomial::Var(n, j));
  return a;
}

}  // namespace attrakt::linalg
