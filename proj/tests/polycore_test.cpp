#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "attrakt/polynomial.hpp"

namespace attrakt {
namespace {

Polynomial X(int n, int i) { return Polynomial::Var(n, i); }
Polynomial C(int n, double v) { return Polynomial::Constant(n, v); }

Polynomial Random(std::mt19937_64& rng, int n, int max_deg, int terms) {
  std::uniform_int_distribution<int> deg(0, max_deg);
  std::uniform_int_distribution<int> var(0, n - 1);
  std::uniform_real_distribution<double> coef(-1.0, 1.0);
  Polynomial p(n);
  for (int t = 0; t < terms; ++t) {
    std::vector<int> e(n, 0);
    const int d = deg(rng);
    for (int k = 0; k < d; ++k) ++e[var(rng)];
    p += Polynomial::FromMonomial(Monomial(e), coef(rng));
  }
  return p;
}

std::vector<double> Point(std::mt19937_64& rng, int n, double r) {
  std::uniform_real_distribution<double> u(-r, r);
  std::vector<double> z(n);
  for (double& v : z) v = u(rng);
  return z;
}

TEST(Monomial, DegreeAndEquality) {
  const Monomial m({2, 0, 3});
  EXPECT_EQ(m.degree(), 5);
  EXPECT_EQ(Monomial::One(3).degree(), 0);
  EXPECT_EQ(m, Monomial({2, 0, 3}));
  EXPECT_FALSE(m == Monomial({2, 1, 3}));
  EXPECT_EQ(m * Monomial({0, 1, 0}), Monomial({2, 1, 3}));
  const double z[3] = {2.0, 5.0, -1.0};
  EXPECT_DOUBLE_EQ(m.Evaluate(z), -4.0);
}

TEST(Monomial, GradedLexOrder) {
  GradedLex lt;
  EXPECT_TRUE(lt(Monomial({1, 0}), Monomial({2, 0})));
  EXPECT_TRUE(lt(Monomial({2, 0}), Monomial({1, 1})));
  EXPECT_TRUE(lt(Monomial({1, 1}), Monomial({0, 2})));
  EXPECT_FALSE(lt(Monomial({0, 2}), Monomial({0, 2})));
}

TEST(Polynomial, AddExamples) {
  EXPECT_TRUE(((X(1, 0) + C(1, 1)) + (-X(1, 0))) == C(1, 1));
  const Polynomial p = X(2, 0) * X(2, 1) + C(2, 3);
  EXPECT_EQ(p + Polynomial(2), p);
  const Polynomial a = X(2, 0).Pow(2) + X(2, 1), b = X(2, 0).Pow(2) - X(2, 1);
  EXPECT_EQ(a + b, 2.0 * X(2, 0).Pow(2));
}

TEST(Polynomial, MulExamples) {
  EXPECT_EQ((X(1, 0) - C(1, 1)) * (X(1, 0) + C(1, 1)), X(1, 0).Pow(2) - C(1, 1));
  const Polynomial p = X(2, 0) * X(2, 1) - 2.5 * X(2, 1);
  EXPECT_EQ(p * C(2, 1), p);
  const Polynomial s = X(2, 0) + X(2, 1);
  EXPECT_EQ(s * s, X(2, 0).Pow(2) + 2.0 * X(2, 0) * X(2, 1) + X(2, 1).Pow(2));
  EXPECT_EQ((s * s).degree(), 2);
}

TEST(Polynomial, DimensionMismatch) {
  EXPECT_THROW(X(1, 0) + X(2, 0), DimensionError);
  EXPECT_THROW(X(1, 0) * X(2, 0), DimensionError);
  const double z[1] = {1.0};
  EXPECT_THROW(X(2, 0).Evaluate(z), DimensionError);
  EXPECT_THROW(LieDerivative(X(2, 0), {X(2, 0)}), DimensionError);
}

TEST(Polynomial, CleanupAndZeroDegree) {
  const Polynomial tiny = Polynomial::FromMonomial(Monomial({1}), 1e-13);
  EXPECT_TRUE(tiny.is_zero());
  EXPECT_EQ(Polynomial(2).degree(), -1);
  const Polynomial p = X(1, 0) + 1e-13 * X(1, 0).Pow(2);
  EXPECT_EQ(p.size(), 1u);
  for (const auto& [m, c] : (X(1, 0) * 1e-6 * 1e-7).terms()) ADD_FAILURE() << c;
}

TEST(Polynomial, EvaluateExamples) {
  const Polynomial r = X(2, 0).Pow(2) + X(2, 1).Pow(2);
  const double o[2] = {0.0, 0.0}, one[2] = {1.0, 1.0};
  EXPECT_EQ(r.Evaluate(o), 0.0);
  EXPECT_EQ((2.0 * X(2, 0) * X(2, 1)).Evaluate(one), 2.0);
  const Polynomial f1 = -0.42 * X(2, 0) - 1.05 * X(2, 1) - 2.3 * X(2, 0).Pow(2) - 0.5 * X(2, 0) * X(2, 1) -
                        X(2, 0).Pow(3);
  EXPECT_EQ(f1.Evaluate(o), 0.0);
}

TEST(Polynomial, IntegerEvaluationIsExact) {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> ci(-5, 5), pi(-3, 3);
  for (int k = 0; k < 50; ++k) {
    Polynomial p(2);
    long expect = 0;
    const int z[2] = {pi(rng), pi(rng)};
    for (int t = 0; t < 6; ++t) {
      const int a = t % 3, b = t / 2;
      const int c = ci(rng);
      p += Polynomial::FromMonomial(Monomial({a, b}), c);
    }
    for (const auto& [m, c] : p.terms()) {
      long v = static_cast<long>(c);
      for (int e = 0; e < m[0]; ++e) v *= z[0];
      for (int e = 0; e < m[1]; ++e) v *= z[1];
      expect += v;
    }
    const double zd[2] = {double(z[0]), double(z[1])};
    EXPECT_EQ(p.Evaluate(zd), static_cast<double>(expect));
  }
}

TEST(Polynomial, GradientExamples) {
  const auto g = (X(2, 0).Pow(2) + X(2, 1).Pow(2)).Gradient();
  EXPECT_EQ(g[0], 2.0 * X(2, 0));
  EXPECT_EQ(g[1], 2.0 * X(2, 1));
  for (const Polynomial& q : C(3, 4.0).Gradient()) EXPECT_TRUE(q.is_zero());
  const auto h = (2.0 * X(2, 0) * X(2, 1)).Gradient();
  EXPECT_EQ(h[0], 2.0 * X(2, 1));
  EXPECT_EQ(h[1], 2.0 * X(2, 0));
}

TEST(Polynomial, LieDerivativeExamples) {
  const int n = 2;
  EXPECT_EQ(LieDerivative(X(n, 0).Pow(2) + X(n, 1).Pow(2), {-X(n, 0), -X(n, 1)}),
            -2.0 * X(n, 0).Pow(2) - 2.0 * X(n, 1).Pow(2));
  EXPECT_TRUE(LieDerivative(C(n, 3.0), {-X(n, 0), -X(n, 1)}).is_zero());
  const std::vector<Polynomial> f{-X(n, 0) * (C(n, 1) - X(n, 0) * X(n, 1)), -X(n, 1)};
  EXPECT_EQ(LieDerivative(X(n, 0) * X(n, 1), f), X(n, 0).Pow(2) * X(n, 1).Pow(2) - 2.0 * X(n, 0) * X(n, 1));
}

TEST(Polynomial, ToStringCanonical) {
  const Polynomial f1 = -0.42 * X(2, 0) - 1.05 * X(2, 1) - 2.3 * X(2, 0).Pow(2);
  EXPECT_EQ(f1.ToString({"x1", "x2"}), "-0.42*x1 - 1.05*x2 - 2.3*x1^2");
  EXPECT_EQ(Polynomial(2).ToString(), "0");
}

// ---- properties ----

TEST(PolynomialProperty, AddAndMulCommuteWithEvaluation) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 40; ++trial) {
    const int n = 1 + trial % 3;
    const Polynomial p = Random(rng, n, 4, 8), q = Random(rng, n, 4, 8);
    const Polynomial s = p + q, m = p * q;
    for (int k = 0; k < 100; ++k) {
      const auto z = Point(rng, n, 2.0);
      const double pz = p.Evaluate(z), qz = q.Evaluate(z);
      EXPECT_NEAR(s.Evaluate(z), pz + qz, 1e-9 * std::max(1.0, std::abs(pz) + std::abs(qz)));
      EXPECT_NEAR(m.Evaluate(z), pz * qz, 1e-9 * std::max(1.0, std::abs(pz * qz)));
    }
  }
}

TEST(PolynomialProperty, GradientMatchesCentralDifferences) {
  std::mt19937_64 rng(13);
  const double h = 1e-5;
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 1 + trial % 3;
    const Polynomial p = Random(rng, n, 5, 10);
    const auto g = p.Gradient();
    for (int k = 0; k < 100; ++k) {
      auto z = Point(rng, n, 1.0);
      for (int i = 0; i < n; ++i) {
        auto zp = z, zm = z;
        zp[i] += h;
        zm[i] -= h;
        EXPECT_NEAR(g[i].Evaluate(z), (p.Evaluate(zp) - p.Evaluate(zm)) / (2 * h), 1e-5);
      }
    }
  }
}

TEST(PolynomialProperty, LieDerivativeMatchesGradientAndTrajectory) {
  const int n = 2;
  const std::vector<Polynomial> f{-0.42 * X(n, 0) - 1.05 * X(n, 1) - 2.3 * X(n, 0).Pow(2) -
                                      0.5 * X(n, 0) * X(n, 1) - X(n, 0).Pow(3),
                                  1.98 * X(n, 0) + X(n, 0) * X(n, 1)};
  std::mt19937_64 rng(17);
  const Polynomial v = Random(rng, n, 4, 8);
  const Polynomial vdot = LieDerivative(v, f);
  const auto g = v.Gradient();
  auto field = [&](const std::vector<double>& x) {
    return std::vector<double>{f[0].Evaluate(x), f[1].Evaluate(x)};
  };
  for (int k = 0; k < 50; ++k) {
    const auto z = Point(rng, n, 0.5);
    const auto fz = field(z);
    EXPECT_NEAR(vdot.Evaluate(z), g[0].Evaluate(z) * fz[0] + g[1].Evaluate(z) * fz[1], 1e-12);

    // One RK4 step of size h: (V(phi(h)) - V(z)) / h = Vdot(z) + O(h).
    const double hstep = 1e-4;
    auto add = [](std::vector<double> a, const std::vector<double>& b, double s) {
      for (std::size_t i = 0; i < a.size(); ++i) a[i] += s * b[i];
      return a;
    };
    const auto k1 = field(z), k2 = field(add(z, k1, hstep / 2)), k3 = field(add(z, k2, hstep / 2)),
               k4 = field(add(z, k3, hstep));
    auto x = z;
    for (int i = 0; i < n; ++i) x[i] += hstep / 6 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]);
    const double fd = (v.Evaluate(x) - v.Evaluate(z)) / hstep;
    EXPECT_NEAR(fd, vdot.Evaluate(z), 50 * hstep * std::max(1.0, std::abs(vdot.Evaluate(z))));
  }
}

TEST(PolynomialProperty, ScaleVariablesComposesWithEvaluation) {
  std::mt19937_64 rng(19);
  const Polynomial p = Random(rng, 3, 4, 10);
  const double s[3] = {2.0, -0.5, 3.0};
  const Polynomial q = p.ScaleVariables(s);
  for (int k = 0; k < 20; ++k) {
    const auto z = Point(rng, 3, 1.0);
    const double sz[3] = {s[0] * z[0], s[1] * z[1], s[2] * z[2]};
    EXPECT_NEAR(q.Evaluate(z), p.Evaluate(sz), 1e-9 * std::max(1.0, std::abs(p.Evaluate(sz))));
  }
}

}  // namespace
}  // namespace attrakt
