#include "attrakt/polynomial.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>

namespace attrakt {

Monomial::Monomial(std::vector<int> exponents) : exponents_(std::move(exponents)) {
  for (int e : exponents_) {
    if (e < 0) throw std::invalid_argument("negative exponent in monomial");
  }
  degree_ = std::accumulate(exponents_.begin(), exponents_.end(), 0);
}

Monomial Monomial::One(int nvars) { return Monomial(std::vector<int>(nvars, 0)); }

Monomial Monomial::Var(int nvars, int index, int power) {
  std::vector<int> e(nvars, 0);
  e.at(index) = power;
  return Monomial(std::move(e));
}

Monomial Monomial::operator*(const Monomial& other) const {
  if (nvars() != other.nvars()) {
    throw DimensionError("monomial product: variable count mismatch");
  }
  std::vector<int> e(exponents_);
  for (int i = 0; i < nvars(); ++i) e[i] += other.exponents_[i];
  return Monomial(std::move(e));
}

double Monomial::Evaluate(std::span<const double> point) const {
  double v = 1.0;
  for (int i = 0; i < nvars(); ++i) {
    for (int k = 0; k < exponents_[i]; ++k) v *= point[i];
  }
  return v;
}

bool GradedLex::operator()(const Monomial& a, const Monomial& b) const {
  if (a.degree() != b.degree()) return a.degree() < b.degree();
  return a.exponents() > b.exponents();
}

Polynomial::Polynomial(int nvars, TermMap terms) : nvars_(nvars), terms_(std::move(terms)) {
  for (const auto& [m, c] : terms_) {
    if (m.nvars() != nvars_) throw DimensionError("monomial length differs from nvars");
  }
  Cleanup();
}

Polynomial Polynomial::Constant(int nvars, double value) {
  TermMap t;
  t[Monomial::One(nvars)] = value;
  return Polynomial(nvars, std::move(t));
}

Polynomial Polynomial::Var(int nvars, int index) {
  TermMap t;
  t[Monomial::Var(nvars, index)] = 1.0;
  return Polynomial(nvars, std::move(t));
}

Polynomial Polynomial::FromMonomial(const Monomial& m, double coeff) {
  TermMap t;
  t[m] = coeff;
  return Polynomial(m.nvars(), std::move(t));
}

Polynomial Polynomial::SquaredNormPower(int nvars, int k) {
  Polynomial sq(nvars);
  for (int i = 0; i < nvars; ++i) sq += FromMonomial(Monomial::Var(nvars, i, 2));
  return sq.Pow(k);
}

int Polynomial::degree() const {
  if (terms_.empty()) return -1;
  // Graded order keeps the highest degree at the back.
  return terms_.rbegin()->first.degree();
}

int Polynomial::min_degree() const {
  if (terms_.empty()) return -1;
  return terms_.begin()->first.degree();
}

double Polynomial::coefficient(const Monomial& m) const {
  auto it = terms_.find(m);
  return it == terms_.end() ? 0.0 : it->second;
}

double Polynomial::max_abs_coefficient() const {
  double r = 0.0;
  for (const auto& [m, c] : terms_) r = std::max(r, std::abs(c));
  return r;
}

void Polynomial::Cleanup() {
  std::erase_if(terms_, [](const auto& kv) { return std::abs(kv.second) < kCleanupThreshold; });
}

Polynomial& Polynomial::operator+=(const Polynomial& other) {
  if (nvars_ != other.nvars_) throw DimensionError("add: variable count mismatch");
  for (const auto& [m, c] : other.terms_) terms_[m] += c;
  Cleanup();
  return *this;
}

Polynomial& Polynomial::operator-=(const Polynomial& other) {
  if (nvars_ != other.nvars_) throw DimensionError("sub: variable count mismatch");
  for (const auto& [m, c] : other.terms_) terms_[m] -= c;
  Cleanup();
  return *this;
}

Polynomial& Polynomial::operator*=(double s) {
  for (auto& [m, c] : terms_) c *= s;
  Cleanup();
  return *this;
}

Polynomial operator*(const Polynomial& a, const Polynomial& b) {
  if (a.nvars_ != b.nvars_) throw DimensionError("mul: variable count mismatch");
  Polynomial r(a.nvars_);
  for (const auto& [ma, ca] : a.terms_) {
    for (const auto& [mb, cb] : b.terms_) r.terms_[ma * mb] += ca * cb;
  }
  r.Cleanup();
  return r;
}

Polynomial Polynomial::Pow(int k) const {
  if (k < 0) throw std::invalid_argument("negative polynomial power");
  Polynomial result = Constant(nvars_, 1.0);
  Polynomial base = *this;
  while (k > 0) {
    if (k & 1) result = result * base;
    k >>= 1;
    if (k > 0) base = base * base;
  }
  return result;
}

double Polynomial::Evaluate(std::span<const double> point) const {
  if (static_cast<int>(point.size()) != nvars_) {
    throw DimensionError("evaluate: point dimension mismatch");
  }
  double v = 0.0;
  for (const auto& [m, c] : terms_) v += c * m.Evaluate(point);
  return v;
}

Polynomial Polynomial::Derivative(int index) const {
  if (index < 0 || index >= nvars_) throw DimensionError("derivative: bad variable index");
  Polynomial r(nvars_);
  for (const auto& [m, c] : terms_) {
    const int e = m[index];
    if (e == 0) continue;
    std::vector<int> exps = m.exponents();
    exps[index] -= 1;
    r.terms_[Monomial(std::move(exps))] += c * e;
  }
  r.Cleanup();
  return r;
}

std::vector<Polynomial> Polynomial::Gradient() const {
  std::vector<Polynomial> g;
  g.reserve(nvars_);
  for (int i = 0; i < nvars_; ++i) g.push_back(Derivative(i));
  return g;
}

Polynomial Polynomial::ScaleVariables(std::span<const double> scale) const {
  if (static_cast<int>(scale.size()) != nvars_) throw DimensionError("scale: dimension mismatch");
  Polynomial r(nvars_);
  for (const auto& [m, c] : terms_) r.terms_[m] = c * m.Evaluate(scale);
  r.Cleanup();
  return r;
}

bool Polynomial::AlmostEqual(const Polynomial& other, double tol) const {
  if (nvars_ != other.nvars_) return false;
  Polynomial diff = *this - other;
  return diff.max_abs_coefficient() <= tol;
}

std::string FormatDouble(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, ptr);
}

std::vector<std::string> DefaultVarNames(int nvars) {
  std::vector<std::string> names;
  for (int i = 0; i < nvars; ++i) names.push_back("x" + std::to_string(i + 1));
  return names;
}

std::string Polynomial::ToString() const { return ToString(DefaultVarNames(nvars_)); }

std::string Polynomial::ToString(const std::vector<std::string>& var_names) const {
  if (static_cast<int>(var_names.size()) != nvars_) {
    throw DimensionError("to_string: wrong number of variable names");
  }
  if (terms_.empty()) return "0";
  std::string out;
  bool first = true;
  for (const auto& [m, c] : terms_) {
    const bool negative = std::signbit(c);
    const double mag = std::abs(c);
    if (first) {
      if (negative) out += "-";
    } else {
      out += negative ? " - " : " + ";
    }
    first = false;

    std::string mono;
    for (int i = 0; i < nvars_; ++i) {
      if (m[i] == 0) continue;
      if (!mono.empty()) mono += "*";
      mono += var_names[i];
      if (m[i] > 1) mono += "^" + std::to_string(m[i]);
    }
    if (mono.empty()) {
      out += FormatDouble(mag);
    } else if (mag == 1.0) {
      out += mono;
    } else {
      out += FormatDouble(mag) + "*" + mono;
    }
  }
  return out;
}

Polynomial LieDerivative(const Polynomial& v, const std::vector<Polynomial>& f) {
  if (static_cast<int>(f.size()) != v.nvars()) {
    throw DimensionError("lie_derivative: vector field length differs from nvars");
  }
  Polynomial r(v.nvars());
  for (int i = 0; i < v.nvars(); ++i) {
    if (f[i].nvars() != v.nvars()) throw DimensionError("lie_derivative: component nvars mismatch");
    r += v.Derivative(i) * f[i];
  }
  return r;
}

}  // namespace attrakt
