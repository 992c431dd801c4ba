#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "attrakt/linalg.hpp"
#include "attrakt/roa.hpp"

namespace attrakt::roa {
namespace {

PolySystem System(const std::string& text) { return ParseSystem(text); }

const char* kToy = "vars: x\ndot x = -x + x^3\n";
const char* kLinear = "vars: x\ndot x = -x\n";
const char* kUnstable = "vars: x\ndot x = x\n";
const char* kEx1 =
    "vars: x1 x2\n"
    "dot x1 = -0.42*x1 - 1.05*x2 - 2.3*x1^2 - 0.5*x1*x2 - x1^3\n"
    "dot x2 = 1.98*x1 + x1*x2\n";

Polynomial P(const std::string& text, const PolySystem& sys) { return ParsePolynomial(text, sys.var_names); }

PiecewiseMax Single(const Polynomial& r) { return PiecewiseMax{{r}}; }

double MinEig(const sos::Gram& g) {
  if (g.basis.empty()) return 0.0;
  return linalg::MinEigenvalue(linalg::SymMatrix::FromDense([&] {
    linalg::Matrix m(static_cast<int>(g.q.rows()), static_cast<int>(g.q.cols()));
    for (int r = 0; r < m.rows(); ++r)
      for (int c = 0; c < m.cols(); ++c) m(r, c) = g.q(r, c);
    return m;
  }()));
}

Polynomial Const(int n, double v) { return Polynomial::Constant(n, v); }

TEST(Degrees, EvenCeil) {
  EXPECT_EQ(EvenCeil(-3), 0);
  EXPECT_EQ(EvenCeil(0), 0);
  EXPECT_EQ(EvenCeil(1), 2);
  EXPECT_EQ(EvenCeil(4), 4);
  EXPECT_EQ(EvenCeil(5), 6);
}

TEST(Labels, PieceAndPair) {
  EXPECT_EQ(Label("a", 0, 1), "a");
  EXPECT_EQ(Label("a", 1, 2), "a[2]");
  EXPECT_EQ(PairLabel("b", 0, 1), "b[1,2]");
}

TEST(PiecewiseMax, EvaluateAndActive) {
  const PolySystem sys = System("vars: x1 x2\ndot x1 = -x1\ndot x2 = -x2\n");
  const PiecewiseMax m{{P("x1^2", sys), P("x2^2", sys)}};
  const double a[2] = {1.0, 2.0};
  EXPECT_DOUBLE_EQ(m.Evaluate(a), 4.0);
  EXPECT_EQ(m.Active(a, 1e-9), std::vector<int>{1});
  const double b[2] = {1.0, 1.0};
  EXPECT_EQ(m.Active(b, 1e-9), (std::vector<int>{0, 1}));
  EXPECT_EQ(m.degree(), 2);
}

TEST(Step1, LinearContractionIsFeasible) {
  const PolySystem sys = System(kLinear);
  RunConfig cfg;
  cfg.deg_vn = 2;
  const Probe pr = SolveStep1(sys, Single(P("x^2", sys)), 1.0, cfg);
  ASSERT_EQ(pr.status, sdp::SolveStatus::kOptimal);
  const Step1Artifacts& a = *pr.artifacts;
  const Monomial x2 = Monomial::Var(1, 0, 2);
  EXPECT_GT(a.v_n.coefficient(x2), 0.0);
  EXPECT_EQ(a.v_n.degree(), 2);
  EXPECT_TRUE(a.m0[0].is_zero());  // deg V_N - deg R = 0 leaves no room for m0
  // p is a non-positive constant: its value at 0 times gamma bounds the constant of (a).
  EXPECT_LE(a.p[0].coefficient(Monomial::One(1)), 1e-8);
  for (const auto& [name, g] : a.grams) EXPECT_GE(MinEig(g), -1e-7) << name;
}

TEST(Step1, UnstableOriginIsInfeasible) {
  const PolySystem sys = System(kUnstable);
  RunConfig cfg;
  for (double g : {0.01, 1.0, 10.0}) {
    EXPECT_NE(SolveStep1(sys, Single(P("x^2", sys)), g, cfg).status, sdp::SolveStatus::kOptimal) << g;
  }
}

TEST(Step1, ConstraintGramsReexpandToTheConditions) {
  const PolySystem sys = System(kToy);
  RunConfig cfg;
  const Polynomial r = P("x^2", sys);
  const double gamma = 0.8;
  const Probe pr = SolveStep1(sys, Single(r), gamma, cfg);
  ASSERT_EQ(pr.status, sdp::SolveStatus::kOptimal);
  const Step1Artifacts& a = *pr.artifacts;
  const Polynomial slack = Const(1, gamma) - r;
  const Polynomial margin = cfg.eps_margin * Polynomial::SquaredNormPower(1, 1);
  const Polynomial ea = -LieDerivative(r, sys.f) - a.p[0] * slack - margin;
  const Polynomial eb = a.v_n - a.m0[0] * slack - margin;
  const Polynomial ec = -LieDerivative(a.v_n, sys.f) - a.m1[0] * slack - margin;
  EXPECT_TRUE(a.grams.at("a").Expand(1).AlmostEqual(ea, 1e-6));
  EXPECT_TRUE(a.grams.at("b").Expand(1).AlmostEqual(eb, 1e-6));
  EXPECT_TRUE(a.grams.at("c").Expand(1).AlmostEqual(ec, 1e-6));
  EXPECT_TRUE(a.grams.at("m1").Expand(1).AlmostEqual(a.m1[0], 1e-9));
}

TEST(Step1, DegreeOverrideChangesMultiplierSupport) {
  const PolySystem sys = System(kToy);
  RunConfig cfg;
  cfg.deg_multipliers["p"] = 4;
  const ConditionProgram cp = Step1Conditions(sys, P("x^2", sys), 0.5, cfg);
  const Probe pr = SolveStep1(sys, Single(P("x^2", sys)), 0.5, cfg);
  ASSERT_TRUE(pr.artifacts);
  EXPECT_LE(pr.artifacts->p[0].degree(), 4);
  EXPECT_EQ(cp.p.size(), 1u);
}

TEST(Step1MaximizeGamma, ToyThresholdOracle) {
  // -R'f = 2x^2 (1 - x^2) is positive on x^2 = gamma exactly when gamma < 1.
  const PolySystem sys = System(kToy);
  RunConfig cfg;
  const Step1Artifacts a = Step1MaximizeGamma(sys, Single(P("x^2", sys)), cfg);
  EXPECT_GE(a.gamma, 0.99);
  EXPECT_LE(a.gamma, 1.0);
}

TEST(Step1MaximizeGamma, GlobalContractionHitsUpperBound) {
  const PolySystem sys = System(kLinear);
  RunConfig cfg;
  cfg.gamma_hi = 100.0;
  const Step1Artifacts a = Step1MaximizeGamma(sys, Single(P("x^2", sys)), cfg);
  EXPECT_DOUBLE_EQ(a.gamma, 100.0);
}

TEST(Step1MaximizeGamma, UnstableThrowsNotCertifiable) {
  const PolySystem sys = System(kUnstable);
  RunConfig cfg;
  EXPECT_THROW(Step1MaximizeGamma(sys, Single(P("x^2", sys)), cfg), NotCertifiable);
}

TEST(Step1MaximizeGamma, Example1FromQuadraticInitializer) {
  const PolySystem sys = System(kEx1);
  RunConfig cfg;
  const Step1Artifacts a = Step1MaximizeGamma(sys, Single(QuadraticInitializer(sys)), cfg);
  EXPECT_GT(a.gamma, cfg.gamma_lo);
}

TEST(LevelSetMode, AgreesWithGeneralConditionsOnToy) {
  const PolySystem sys = System(kToy);
  RunConfig cfg;
  const PiecewiseMax r = Single(P("x^2", sys));
  for (const auto& [gamma, feasible] : {std::pair{0.5, true}, std::pair{0.9, true}, std::pair{1.1, false}}) {
    const bool general = SolveStep1(sys, r, gamma, cfg).status == sdp::SolveStatus::kOptimal;
    const bool level = SolveStep1(sys, r, gamma, cfg, {}, Step1Mode::kLevelSet).status == sdp::SolveStatus::kOptimal;
    EXPECT_EQ(general, feasible) << gamma;
    EXPECT_EQ(level, feasible) << gamma;
  }
}

TEST(LevelSetMode, UsesRAsLyapunovFunction) {
  const PolySystem sys = System(kToy);
  RunConfig cfg;
  const Probe pr = SolveStep1(sys, Single(P("x^2", sys)), 0.5, cfg, {}, Step1Mode::kLevelSet);
  ASSERT_TRUE(pr.artifacts);
  EXPECT_TRUE(pr.artifacts->v_n.AlmostEqual(P("x^2", sys), 0.0));
  EXPECT_TRUE(pr.artifacts->m0[0].is_zero());
  EXPECT_TRUE(pr.artifacts->m1[0].AlmostEqual(pr.artifacts->p[0], 0.0));
}

TEST(QuadraticInitializer, SolvesLyapunovEquation) {
  const PolySystem sys = System("vars: x1 x2\ndot x1 = -x1\ndot x2 = -2*x2 + x1^2\n");
  const Polynomial r = QuadraticInitializer(sys);
  EXPECT_TRUE(r.AlmostEqual(P("0.5*x1^2 + 0.25*x2^2", sys), 1e-12));
  EXPECT_THROW(QuadraticInitializer(System(kUnstable)), NotCertifiable);
  EXPECT_THROW(QuadraticInitializer(System("vars: x1 x2\ndot x1 = x2\ndot x2 = -x1\n")), NotCertifiable);
}

/// Containment oracle: every sample of E(r_hat, g_hat) lies in E(r, g).
void ExpectContained(const Polynomial& r_hat, double g_hat, const Polynomial& r, double g, int samples,
                     double box) {
  std::mt19937 rng(7);
  const int n = r.nvars();
  std::uniform_real_distribution<double> ud(-box, box);
  int found = 0;
  for (int t = 0; t < 200000 && found < samples; ++t) {
    std::vector<double> z(n);
    for (double& v : z) v = ud(rng);
    if (r_hat.Evaluate(z) > g_hat) continue;
    ++found;
    EXPECT_LE(r.Evaluate(z), g + 1e-7);
  }
  EXPECT_EQ(found, samples);
}

TEST(Step2, LinearIdentityStartAndContainment) {
  const PolySystem sys = System(kLinear);
  RunConfig cfg;
  cfg.gamma_hi = 4.0;
  const Polynomial r_hat = P("x^2", sys);
  const Probe pr = SolveStep1(sys, Single(r_hat), 1.0, cfg);
  ASSERT_TRUE(pr.artifacts);
  const Step2Result s2 = Step2UpdateR(sys, *pr.artifacts, cfg, CompactnessSpec{});
  EXPECT_FALSE(s2.fixed_point);
  EXPECT_GE(s2.artifacts.gamma, 1.0);
  ExpectContained(r_hat, 1.0, s2.artifacts.r.pieces[0], s2.artifacts.gamma, 500, 1.0);
  EXPECT_GE(MinEig(s2.link.gram), -1e-7);
}

TEST(Step2, Example1UpdateGrowsOrStops) {
  const PolySystem sys = System(kEx1);
  RunConfig cfg;
  const Step1Artifacts s1 = Step1MaximizeGamma(sys, Single(QuadraticInitializer(sys)), cfg);
  const Step2Result s2 = Step2UpdateR(sys, s1, cfg, CompactnessSpec{cfg.kappa, 1});
  if (s2.fixed_point) GTEST_SKIP() << "fixed point";
  EXPECT_GT(s2.artifacts.gamma, s1.gamma);
  ExpectContained(s1.r.pieces[0], s1.gamma, s2.artifacts.r.pieces[0], s2.artifacts.gamma, 500, 0.3);
  const ContainmentLink& l = s2.link;
  const Polynomial identity = (Const(2, l.gamma) - l.r) - l.m3 * (Const(2, l.gamma_prev) - l.r_prev);
  EXPECT_TRUE(l.gram.Expand(2).AlmostEqual(identity, 1e-6));
}

TEST(Algorithm3, LinearTerminatesAtUpperBound) {
  const PolySystem sys = System(kLinear);
  RunConfig cfg;
  cfg.gamma_hi = 100.0;
  const auto certs = Algorithm3(sys, cfg);
  ASSERT_FALSE(certs.empty());
  EXPECT_DOUBLE_EQ(certs.back().gamma, 100.0);
}

TEST(Algorithm3, UnstableOriginIsRejected) {
  const PolySystem sys = System(kUnstable);
  EXPECT_THROW(Algorithm3(sys, RunConfig{}), NotCertifiable);
}

TEST(Algorithm3, Example1MonotoneChainWithVerifiableLinks) {
  const PolySystem sys = System(kEx1);
  RunConfig cfg;
  const auto certs = Algorithm3(sys, cfg);
  ASSERT_GE(certs.size(), 2u);
  EXPECT_LE(static_cast<int>(certs.size()), cfg.max_outer_iters + 1);
  for (std::size_t k = 1; k < certs.size(); ++k) {
    EXPECT_GE(certs[k].gamma, certs[k - 1].gamma);
    EXPECT_EQ(certs[k].m3_chain.size(), k);
  }
  for (const ContainmentLink& l : certs.back().m3_chain) {
    EXPECT_GE(MinEig(l.gram), -1e-7);
    EXPECT_GE(MinEig(l.m3_gram), -1e-7);
    const Polynomial identity = (Const(2, l.gamma) - l.r) - l.m3 * (Const(2, l.gamma_prev) - l.r_prev);
    EXPECT_TRUE(l.gram.Expand(2).AlmostEqual(identity, 1e-6));
  }
  const EraCertificate& last = certs.back();
  auto lf = RecoverRationalLf(sys, last.r, last.gamma, last.p, cfg);
  ASSERT_TRUE(lf.has_value());
  EraCertificate with = last;
  AttachRational(with, *lf);
  EXPECT_TRUE(with.has_rational());
  EXPECT_TRUE(with.grams.count("r"));
  const double z0[2] = {0.0, 0.0};
  EXPECT_DOUBLE_EQ(with.RationalV(z0), 0.0);
}

TEST(RationalLf, LinearContractionIsFeasible) {
  const PolySystem sys = System(kLinear);
  RunConfig cfg;
  const Polynomial r = P("x^2", sys);
  const Probe pr = SolveStep1(sys, Single(r), 1.0, cfg);
  ASSERT_TRUE(pr.artifacts);
  const auto lf = RecoverRationalLf(sys, Single(r), 1.0, pr.artifacts->p, cfg);
  ASSERT_TRUE(lf.has_value());
  EraCertificate cert = MakeCertificate(sys, *pr.artifacts, cfg, 0);
  AttachRational(cert, *lf);
  // V = V_N / (1 - x^2) grows without bound towards the boundary.
  const double near[1] = {0.999};
  const double mid[1] = {0.5};
  EXPECT_GT(cert.RationalV(near), 100.0 * cert.RationalV(mid));
  const double out[1] = {1.5};
  EXPECT_TRUE(std::isinf(cert.RationalV(out)));
}

TEST(Piecewise, SinglePieceReducesToStep1) {
  const PolySystem sys = System(kToy);
  RunConfig cfg;
  const PiecewiseMax r = Single(P("x^2", sys));
  const Step1Artifacts a = Step1MaximizeGamma(sys, r, cfg);
  const EraCertificate c = PiecewiseEra(sys, r, cfg);
  EXPECT_DOUBLE_EQ(c.gamma, a.gamma);
  EXPECT_TRUE(c.s.empty());
  std::ostringstream x, y;
  Step1Conditions(sys, r, 0.5, cfg).prog.Compile().Dump(x);
  Step1Conditions(sys, r.pieces[0], 0.5, cfg).prog.Compile().Dump(y);
  EXPECT_EQ(x.str(), y.str());
}

TEST(Piecewise, Example3BoundedByAnalyticBoundary) {
  const PolySystem sys = System("vars: x1 x2\ndot x1 = -x1*(1 - x1*x2)\ndot x2 = -x2\n");
  RunConfig cfg;
  cfg.deg_vn = 6;
  const PiecewiseMax pm{{P("0.005*(x1^2 - 2*x1*x2 + x2^2)", sys), P("2*x1*x2", sys)}};
  const EraCertificate c = PiecewiseEra(sys, pm, cfg);
  EXPECT_GT(c.gamma, 0.0);
  EXPECT_LT(c.gamma, 4.0);
  EXPECT_TRUE(c.piecewise());
  EXPECT_FALSE(c.s.empty());
  for (const auto& [name, g] : c.grams) EXPECT_GE(MinEig(g), -1e-7) << name;
}

// ---- certificate I/O ----

Polynomial RandomPoly(std::mt19937& rng, int n, int terms) {
  std::uniform_int_distribution<int> ed(0, 3);
  std::normal_distribution<double> nd;
  Polynomial p(n);
  for (int t = 0; t < terms; ++t) {
    std::vector<int> e(n);
    for (int& v : e) v = ed(rng);
    p += Polynomial::FromMonomial(Monomial(e), nd(rng) * std::pow(10.0, ed(rng) - 2));
  }
  return p;
}

sos::Gram RandomGram(std::mt19937& rng, int n, int size) {
  std::normal_distribution<double> nd;
  sos::Gram g;
  g.basis = sos::MonomialBasis(n, 0, 3);
  g.basis.resize(std::min<std::size_t>(g.basis.size(), size));
  const auto k = static_cast<Eigen::Index>(g.basis.size());
  g.q.resize(k, k);
  for (Eigen::Index r = 0; r < k; ++r)
    for (Eigen::Index c = 0; c <= r; ++c) g.q(r, c) = g.q(c, r) = nd(rng) / 3.0;
  return g;
}

EraCertificate RandomCertificate(std::mt19937& rng) {
  std::uniform_int_distribution<int> nd(1, 3), pd(1, 3), coin(0, 1);
  const int n = nd(rng);
  const int d = pd(rng);
  EraCertificate c;
  c.var_names = DefaultVarNames(n);
  for (int i = 0; i < d; ++i) c.r.pieces.push_back(RandomPoly(rng, n, 4));
  c.gamma = std::uniform_real_distribution<double>(1e-3, 10.0)(rng);
  c.v_n = RandomPoly(rng, n, 6);
  const bool rational = coin(rng);
  for (int i = 0; i < d; ++i) {
    c.p.push_back(RandomPoly(rng, n, 3));
    c.m0.push_back(RandomPoly(rng, n, 3));
    c.m1.push_back(RandomPoly(rng, n, 3));
    if (rational) c.m2.push_back(RandomPoly(rng, n, 3));
  }
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      if (i != j) c.s[PairLabel("a", i, j)] = RandomPoly(rng, n, 2);
  for (int k = coin(rng) + coin(rng); k > 0; --k) {
    ContainmentLink l{RandomPoly(rng, n, 3), 0.5, RandomPoly(rng, n, 3), 0.7, RandomPoly(rng, n, 1),
                      RandomGram(rng, n, 2), RandomGram(rng, n, 4)};
    c.m3_chain.push_back(l);
  }
  c.grams["a"] = RandomGram(rng, n, 5);
  c.grams["m0"] = RandomGram(rng, n, 3);
  c.eps_margin = 1e-6;
  c.iteration = coin(rng) * 3;
  c.config = {{"deg_vn", "4"}, {"gamma_hi", "100"}};
  return c;
}

bool SameGram(const sos::Gram& a, const sos::Gram& b) {
  return a.basis == b.basis && a.q.rows() == b.q.rows() && (a.q.size() == 0 || a.q == b.q);
}

TEST(CertificateIo, RoundTripIsBitExact) {
  std::mt19937 rng(11);
  for (int t = 0; t < 50; ++t) {
    const EraCertificate c = RandomCertificate(rng);
    const std::string text = WriteCertificate(c);
    const EraCertificate back = ReadCertificate(text);
    EXPECT_EQ(WriteCertificate(back), text);
    EXPECT_EQ(back.gamma, c.gamma);
    ASSERT_EQ(back.r.size(), c.r.size());
    for (int i = 0; i < c.r.size(); ++i) EXPECT_TRUE(back.r.pieces[i].AlmostEqual(c.r.pieces[i], 0.0));
    EXPECT_TRUE(back.v_n.AlmostEqual(c.v_n, 0.0));
    EXPECT_EQ(back.has_rational(), c.has_rational());
    EXPECT_EQ(back.s.size(), c.s.size());
    ASSERT_EQ(back.m3_chain.size(), c.m3_chain.size());
    for (std::size_t k = 0; k < c.m3_chain.size(); ++k) {
      EXPECT_TRUE(SameGram(back.m3_chain[k].gram, c.m3_chain[k].gram));
      EXPECT_EQ(back.m3_chain[k].gamma_prev, c.m3_chain[k].gamma_prev);
    }
    for (const auto& [k, g] : c.grams) EXPECT_TRUE(SameGram(back.grams.at(k), g)) << k;
    EXPECT_EQ(back.config, c.config);
  }
}

TEST(CertificateIo, SinglePieceUsesScalarFields) {
  std::mt19937 rng(3);
  EraCertificate c = RandomCertificate(rng);
  c.r.pieces.resize(1);
  c.p.resize(1);
  c.m0.resize(1);
  c.m1.resize(1);
  c.m2.clear();
  c.s.clear();
  const std::string text = WriteCertificate(c);
  EXPECT_NE(text.find("\"R\""), std::string::npos);
  EXPECT_EQ(text.find("\"pieces\""), std::string::npos);
  EXPECT_EQ(text.find("\"m2\""), std::string::npos);
}

TEST(CertificateIo, MalformedInputIsParseError) {
  EXPECT_THROW(ReadCertificate("{"), ParseError);
  EXPECT_THROW(ReadCertificate("[]"), ParseError);
  EXPECT_THROW(ReadCertificate(R"({"nvars": 1})"), ParseError);
  std::mt19937 rng(5);
  EraCertificate c = RandomCertificate(rng);
  std::string text = WriteCertificate(c);
  const auto pos = text.find("\"gamma\"");
  text.replace(pos, 7, "\"gamme\"");
  EXPECT_THROW(ReadCertificate(text), ParseError);
}

}  // namespace
}  // namespace attrakt::roa
