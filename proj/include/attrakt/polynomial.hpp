#pragma once

#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace attrakt {

/// Raised when operands disagree on the number of state variables.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A monomial x1^e1 * ... * xn^en, stored as its exponent vector.
class Monomial {
 public:
  Monomial() = default;
  explicit Monomial(std::vector<int> exponents);

  static Monomial One(int nvars);
  static Monomial Var(int nvars, int index, int power = 1);

  int nvars() const { return static_cast<int>(exponents_.size()); }
  int degree() const { return degree_; }
  int operator[](int i) const { return exponents_[i]; }
  const std::vector<int>& exponents() const { return exponents_; }

  Monomial operator*(const Monomial& other) const;
  double Evaluate(std::span<const double> point) const;

  friend bool operator==(const Monomial& a, const Monomial& b) {
    return a.exponents_ == b.exponents_;
  }

 private:
  std::vector<int> exponents_;
  int degree_ = 0;
};

/// Graded lexicographic order: total degree ascending, then exponent vectors
/// in descending lexicographic order (x1^2 before x1*x2 before x2^2).
struct GradedLex {
  bool operator()(const Monomial& a, const Monomial& b) const;
};

/// Sparse multivariate polynomial with double coefficients. Every operation
/// drops coefficients whose magnitude falls below kCleanupThreshold.
class Polynomial {
 public:
  using TermMap = std::map<Monomial, double, GradedLex>;
  static constexpr double kCleanupThreshold = 1e-12;

  explicit Polynomial(int nvars = 0) : nvars_(nvars) {}
  Polynomial(int nvars, TermMap terms);

  static Polynomial Constant(int nvars, double value);
  static Polynomial Var(int nvars, int index);
  static Polynomial FromMonomial(const Monomial& m, double coeff = 1.0);
  /// (x1^2 + ... + xn^2)^k
  static Polynomial SquaredNormPower(int nvars, int k);

  int nvars() const { return nvars_; }
  const TermMap& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }
  std::size_t size() const { return terms_.size(); }

  /// Total degree; the zero polynomial has degree -1.
  int degree() const;
  /// Smallest total degree among stored terms; -1 for the zero polynomial.
  int min_degree() const;
  double coefficient(const Monomial& m) const;
  double max_abs_coefficient() const;

  Polynomial& operator+=(const Polynomial& other);
  Polynomial& operator-=(const Polynomial& other);
  Polynomial& operator*=(double s);
  friend Polynomial operator+(Polynomial a, const Polynomial& b) { return a += b; }
  friend Polynomial operator-(Polynomial a, const Polynomial& b) { return a -= b; }
  friend Polynomial operator*(Polynomial a, double s) { return a *= s; }
  friend Polynomial operator*(double s, Polynomial a) { return a *= s; }
  friend Polynomial operator*(const Polynomial& a, const Polynomial& b);
  Polynomial operator-() const { return *this * -1.0; }
  Polynomial Pow(int k) const;

  double Evaluate(std::span<const double> point) const;
  /// Partial derivative with respect to x_index.
  Polynomial Derivative(int index) const;
  std::vector<Polynomial> Gradient() const;
  /// Replaces x_i by scale[i] * x_i.
  Polynomial ScaleVariables(std::span<const double> scale) const;

  /// True when every coefficient of the difference is at most tol in magnitude.
  bool AlmostEqual(const Polynomial& other, double tol) const;
  friend bool operator==(const Polynomial& a, const Polynomial& b) {
    return a.nvars_ == b.nvars_ && a.terms_ == b.terms_;
  }

  /// Canonical text in graded-lex order, e.g. "-0.42*x1 - 1.05*x2 - 2.3*x1^2".
  /// Coefficients use the shortest round-tripping decimal form.
  std::string ToString(const std::vector<std::string>& var_names) const;
  std::string ToString() const;

 private:
  void Cleanup();

  int nvars_ = 0;
  TermMap terms_;
};

/// <grad V, f> = sum_i dV/dx_i * f_i.
Polynomial LieDerivative(const Polynomial& v, const std::vector<Polynomial>& f);

/// Default names x1..xn.
std::vector<std::string> DefaultVarNames(int nvars);

/// Formats a double with the shortest representation that parses back to
/// the same value.
std::string FormatDouble(double value);

}  // namespace attrakt
