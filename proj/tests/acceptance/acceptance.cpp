// One PASS/FAIL line per acceptance criterion; exit status 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>

#include "attrakt/linalg.hpp"
#include "attrakt/roa.hpp"
#include "attrakt/sdp.hpp"
#include "attrakt/sosprog.hpp"
#include "attrakt/verify.hpp"
#include "sdp_random.hpp"

namespace {

using namespace attrakt;

PolySystem LoadSystem(const std::string& name) {
  return ParseSystem(ReadFile(std::string(ATTRAKT_SYSTEMS_DIR) + "/" + name));
}
RunConfig LoadConfig(const std::string& name) {
  return ParseConfig(ReadFile(std::string(ATTRAKT_SYSTEMS_DIR) + "/" + name));
}

struct Verdict {
  bool pass = true;
  std::ostringstream why;

  void Require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      why << " [failed: " << what << "]";
    }
  }
};

double MinEig(const sos::Gram& g) {
  if (g.q.rows() == 0) return 0.0;
  const int n = static_cast<int>(g.q.rows());
  linalg::SymMatrix s(n);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c <= r; ++c) s(r, c) = 0.5 * (g.q(r, c) + g.q(c, r));
  return linalg::MinEigenvalue(s);
}

std::string Fmt(double v) {
  std::ostringstream s;
  s.precision(6);
  s << v;
  return s.str();
}

/// gamma trace is non-decreasing and every m3 Gram is PSD.
void CheckTrace(const std::string& name, const std::vector<roa::EraCertificate>& certs, Verdict& v) {
  for (std::size_t k = 1; k < certs.size(); ++k)
    v.Require(certs[k].gamma >= certs[k - 1].gamma, name + " gamma decreases at iteration " + std::to_string(k));
  double worst = 0.0;
  for (const auto& c : certs)
    for (const auto& l : c.m3_chain) worst = std::min({worst, MinEig(l.gram), MinEig(l.m3_gram)});
  v.Require(worst >= -1e-7, name + " m3 Gram eigenvalue " + Fmt(worst));
  v.why << " " << name << ": " << certs.size() << " iterates, gamma " << Fmt(certs.front().gamma) << " -> "
        << Fmt(certs.back().gamma) << ";";
}

std::vector<roa::EraCertificate> ex1_certs, ex2_certs, ex2_reseed, ex3_certs, toy_certs;

Verdict Criterion1() {
  Verdict v;
  const PolySystem sys = LoadSystem("ex1.sys");
  const RunConfig cfg = LoadConfig("default.cfg");
  const auto t0 = std::chrono::steady_clock::now();
  ex1_certs = roa::Algorithm3(sys, cfg);
  roa::EraCertificate& last = ex1_certs.back();
  const auto lf = roa::RecoverRationalLf(sys, last.r, last.gamma, last.p, cfg);
  if (lf) roa::AttachRational(last, *lf);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const auto rep = verify::CheckCertificate(sys, last, verify::VerifyConfig::From(cfg));
  v.Require(static_cast<int>(ex1_certs.size()) - 1 <= 10, "more than 10 outer iterations");
  v.Require(secs <= 300.0, "slower than 5 minutes");
  v.Require(rep.pass(), "check_certificate FAIL");
  v.Require(rep.interior_samples == 200 && rep.interior_converged == 200, "interior convergence");
  v.Require(rep.worst_boundary_lie < 0.0, "boundary derivative");
  v.Require(lf.has_value(), "rational LF not recovered");
  v.Require(rep.rational_checked && rep.rational_trajectories == 20 && rep.rational_violations == 0,
            "rational V decrease");
  v.why << " gamma " << Fmt(last.gamma) << " after " << ex1_certs.size() - 1 << " updates in " << Fmt(secs)
        << " s; interior " << rep.interior_converged << "/" << rep.interior_samples << "; max <grad R, f> "
        << Fmt(rep.worst_boundary_lie) << "; rational V decreasing on " << rep.rational_trajectories -
           rep.rational_violations << "/" << rep.rational_trajectories << " trajectories";
  return v;
}

Verdict Criterion2() {
  Verdict v;
  const PolySystem sys = LoadSystem("ex3.sys");
  const RunConfig cfg = LoadConfig("ex3.cfg");
  const auto pieces = ParsePieces(ReadFile(std::string(ATTRAKT_SYSTEMS_DIR) + "/ex3.pieces"), sys.var_names);
  const roa::EraCertificate c = roa::PiecewiseEra(sys, roa::PiecewiseMax{pieces}, cfg);
  v.Require(c.gamma > 0.0 && c.gamma < 4.0, "0 < gamma < 4");

  std::mt19937_64 rng(cfg.seed);
  const auto bs = verify::SampleBoundary(c.r, c.gamma, cfg.n_boundary, cfg.search_radius, rng);
  double worst = -1e300;
  for (const auto& z : bs.points) worst = std::max(worst, z[0] * z[1]);
  v.Require(!bs.points.empty() && worst <= 2.0 - 1e-6, "boundary sample with x1 x2 > 2 - 1e-6");

  const verify::Box box = verify::BoxAround(bs.points, 0.05);
  const auto inside = verify::SampleSublevel(c.r, c.gamma, box, 100, rng);
  verify::Rk4Options o;
  o.dt = cfg.sim_dt;
  o.t_final = cfg.sim_T;
  o.conv_tol = cfg.conv_tol;
  o.stride = 0;
  o.escape_radius = 1e3;
  int converged = 0;
  for (const auto& t : verify::SimulateBatch(sys, inside, o)) converged += t.status == verify::TrajectoryStatus::kConverged;
  v.Require(inside.size() == 100 && converged == 100, "interior convergence");

  std::uniform_real_distribution<double> mag(0.3, 4.0), excess(0.0, 2.0);
  std::bernoulli_distribution sign;
  std::vector<std::vector<double>> outside;
  for (int k = 0; k < 20; ++k) {
    const double x1 = mag(rng), prod = 2.05 + 1e-3 + excess(rng), s = sign(rng) ? 1.0 : -1.0;
    outside.push_back({s * x1, s * prod / x1});
  }
  int diverged = 0;
  for (const auto& t : verify::SimulateBatch(sys, outside, o)) diverged += t.status == verify::TrajectoryStatus::kDiverged;
  v.Require(diverged == 20, "divergence beyond x1 x2 = 2.05");
  const auto rep = verify::CheckCertificate(sys, c, verify::VerifyConfig::From(cfg));
  v.Require(rep.pass(), "check_certificate FAIL");
  v.why << " gamma* " << Fmt(c.gamma) << "; max x1 x2 on " << bs.points.size() << " boundary samples "
        << Fmt(worst) << "; interior " << converged << "/100 converge; " << diverged << "/20 diverge beyond 2.05";
  ex3_certs = roa::Algorithm3(sys, cfg);
  return v;
}

Verdict Criterion3() {
  Verdict v;
  const PolySystem sys = LoadSystem("ex2.sys");
  const RunConfig cfg = LoadConfig("ex2.cfg");
  ex2_certs = roa::Algorithm3(sys, cfg);
  roa::EraCertificate first = ex2_certs.back();
  const auto lf1 = roa::RecoverRationalLf(sys, first.r, first.gamma, first.p, cfg);
  if (lf1) roa::AttachRational(first, *lf1);
  const auto rep1 = verify::CheckCertificate(sys, first, verify::VerifyConfig::From(cfg));
  v.Require(first.r.degree() == 2, "first estimate is not quadratic");
  v.Require(rep1.pass(), "first certificate FAIL");

  const RunConfig cfg2 = LoadConfig("ex2-reseed.cfg");
  ex2_reseed = roa::Algorithm3(sys, cfg2, {}, &first);
  roa::EraCertificate second = ex2_reseed.back();
  const auto lf2 = roa::RecoverRationalLf(sys, second.r, second.gamma, second.p, cfg2);
  if (lf2) roa::AttachRational(second, *lf2);
  const auto rep2 = verify::CheckCertificate(sys, second, verify::VerifyConfig::From(cfg2));
  v.Require(second.r.degree() == 4, "re-seeded estimate is not quartic");
  v.Require(rep2.pass(), "re-seeded certificate FAIL");

  // The last link must go straight from the first set to the final one.
  bool linked = false;
  if (!second.m3_chain.empty()) {
    const roa::ContainmentLink& l = second.m3_chain.back();
    const Polynomial identity = (Polynomial::Constant(3, l.gamma) - l.r) -
                                l.m3 * (Polynomial::Constant(3, l.gamma_prev) - l.r_prev);
    const double err = (l.gram.Expand(3) - identity).max_abs_coefficient() /
                       std::max(1.0, identity.max_abs_coefficient());
    linked = l.r_prev == first.r.pieces[0] && l.gamma_prev == first.gamma && l.r == second.r.pieces[0] &&
             l.gamma == second.gamma && err <= 1e-6 && MinEig(l.gram) >= -1e-7 && MinEig(l.m3_gram) >= -1e-7;
  }
  v.Require(linked, "no verifiable containment link from the first set");
  std::mt19937_64 rng(cfg.seed);
  const auto b1 = verify::SampleBoundary(first.r, first.gamma, 2000, cfg.search_radius, rng);
  double ratio = 0.0;
  for (const auto& z : b1.points) ratio = std::max(ratio, second.r.Evaluate(z) / second.gamma);
  v.Require(!b1.points.empty() && ratio <= 1.0, "sampled boundary of the first set leaves the second");
  v.why << " quadratic gamma " << Fmt(first.gamma) << " (" << (rep1.pass() ? "PASS" : "FAIL")
        << "), quartic re-seed gamma " << Fmt(second.gamma) << " (" << (rep2.pass() ? "PASS" : "FAIL")
        << "); max R2/gamma2 on the first boundary " << Fmt(ratio) << "; rational LF "
        << (lf1 ? "recovered" : "infeasible") << " / " << (lf2 ? "recovered" : "infeasible");
  return v;
}

Verdict Criterion4() {
  Verdict v;
  const PolySystem toy = LoadSystem("toy.sys");
  toy_certs = roa::Algorithm3(toy, RunConfig{});
  CheckTrace("ex1", ex1_certs, v);
  CheckTrace("ex2", ex2_certs, v);
  CheckTrace("ex2-reseed", ex2_reseed, v);
  CheckTrace("ex3", ex3_certs, v);
  CheckTrace("toy", toy_certs, v);
  return v;
}

Verdict Criterion5() {
  Verdict v;
  const PolySystem sys = LoadSystem("toy.sys");
  const auto a = roa::Step1MaximizeGamma(sys, roa::PiecewiseMax{{ParsePolynomial("x^2", sys.var_names)}}, RunConfig{});
  v.Require(a.gamma >= 0.99 && a.gamma <= 1.0, "gamma* outside [0.99, 1]");
  v.why << " gamma* = " << Fmt(a.gamma);
  return v;
}

Verdict Criterion6() {
  using namespace sdp;
  Verdict v;
  std::mt19937 rng(7);
  int feasible_ok = 0;
  double worst_gap = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    std::uniform_int_distribution<int> size(1, 6);
    std::vector<Block> blocks = {{BlockKind::kPsd, size(rng)}, {BlockKind::kPsd, size(rng)}};
    if (trial % 2 == 0) blocks.push_back({BlockKind::kNonneg, size(rng)});
    int dim = 0;
    for (const Block& b : blocks) dim += b.kind == BlockKind::kPsd ? b.size * (b.size + 1) / 2 : b.size;
    const SdpProblem p = testing::RandomFeasible(rng, std::max(1, dim / 2), blocks);
    const SdpSolution s = Solve(p);
    if (s.status != SolveStatus::kOptimal) continue;
    const ResidualReport r = VerifySolution(p, s);
    worst_gap = std::max(worst_gap, r.gap);
    feasible_ok += r.gap <= 1e-8;
  }
  v.Require(feasible_ok == 50, "random feasible instances");
  int infeasible_ok = 0;
  for (int trial = 0; trial < 20; ++trial) {
    std::uniform_int_distribution<int> size(2, 6);
    const SdpProblem p = testing::RandomPrimalInfeasible(rng, 3 + trial % 5, {size(rng), size(rng)});
    infeasible_ok += Solve(p).status == SolveStatus::kPrimalInfeasible;
  }
  SdpProblem planted;
  planted.blocks = {{BlockKind::kPsd, 2}};
  planted.c = {{0, 0, 0, 1.0}};
  planted.a = {{{0, 0, 0, 1.0}}, {{0, 1, 1, 1.0}}, {{0, 1, 0, 0.5}}};
  planted.b = {1.0, 1.0, 2.0};
  infeasible_ok += Solve(planted).status == SolveStatus::kPrimalInfeasible;
  v.Require(infeasible_ok == 21, "planted infeasible instances");

  SdpProblem eig;
  eig.blocks = {{BlockKind::kPsd, 2}};
  eig.c = {{0, 0, 0, 2.0}, {0, 1, 0, 1.0}, {0, 1, 1, 3.0}};
  eig.a = {{{0, 0, 0, 1.0}, {0, 1, 1, 1.0}}};
  eig.b = {1.0};
  const SdpSolution se = Solve(eig);
  const double eig_err = std::abs(se.primal_objective - (5.0 - std::sqrt(5.0)) / 2.0);
  SdpProblem fr;
  fr.blocks = {{BlockKind::kPsd, 2}, {BlockKind::kFree, 1}};
  fr.c = {{1, 0, 0, 1.0}};
  fr.a = {{{0, 0, 0, 1.0}, {1, 0, 0, -1.0}}, {{0, 1, 0, 0.5}}, {{0, 1, 1, 1.0}}};
  fr.b = {0.0, 1.0, 1.0};
  const SdpSolution sf = Solve(fr);
  const double fr_err = std::abs(sf.x[1](0, 0) - 1.0);
  v.Require(se.status == SolveStatus::kOptimal && eig_err <= 1e-7, "2x2 eigenvalue oracle");
  v.Require(sf.status == SolveStatus::kOptimal && fr_err <= 1e-7, "2x2 free-variable oracle");
  v.why << " " << feasible_ok << "/50 feasible (worst gap " << Fmt(worst_gap) << "), " << infeasible_ok
        << "/21 infeasible detected, 2x2 oracle errors " << Fmt(eig_err) << ", " << Fmt(fr_err);
  return v;
}

Verdict Criterion7() {
  using namespace sos;
  Verdict v;
  const Polynomial x = Polynomial::Var(1, 0), one = Polynomial::Constant(1, 1.0);
  SosProgram sq(1);
  sq.AddSos("sq", (x * x + one) * (x * x + one));
  const SosSolution s1 = sq.Solve();
  v.Require(s1.optimal(), "(x^2+1)^2 not feasible");
  SosProgram neg(1);
  neg.AddSos("neg", -(x * x));
  v.Require(neg.Solve().status == sdp::SolveStatus::kPrimalInfeasible, "-x^2 not infeasible");
  SosProgram disc(1);
  const auto b = disc.NewFree("b", {Monomial::One(1)});
  disc.AddSos("disc", Affine(x * x + one) - 2.0 * x * disc(b));
  disc.Minimize({{b, Monomial::One(1), -1.0}});
  const SosSolution s3 = disc.Solve();
  const double bval = s3.optimal() ? s3.value(b).coefficient(Monomial::One(1)) : 0.0;
  v.Require(std::abs(bval - 1.0) <= 1e-6, "b-maximization");

  // Gram identity at 100 random points on every solved constraint.
  std::mt19937 rng(29);
  std::uniform_real_distribution<double> box(-2.0, 2.0);
  double worst = 0.0;
  int constraints = 0;
  auto check_all = [&](const SosProgram& prog, const SosSolution& s, int n) {
    for (int c = 0; c < prog.num_sos_constraints(); ++c, ++constraints) {
      const Polynomial expr = prog.Evaluate(prog.constraint_expression(c), s);
      const Polynomial gram = s.constraint_grams[c].Expand(n);
      for (int k = 0; k < 100; ++k) {
        std::vector<double> pt(n);
        for (double& t : pt) t = box(rng);
        worst = std::max(worst, std::abs(expr.Evaluate(pt) - gram.Evaluate(pt)) / (1.0 + std::abs(expr.Evaluate(pt))));
      }
    }
  };
  check_all(sq, s1, 1);
  if (s3.optimal()) check_all(disc, s3, 1);
  const PolySystem ex1 = LoadSystem("ex1.sys");
  const roa::ConditionProgram cp =
      roa::Step1Conditions(ex1, roa::QuadraticInitializer(ex1), ex1_certs.front().gamma, RunConfig{});
  const SosSolution s4 = cp.prog.Solve();
  if (s4.optimal()) check_all(cp.prog, s4, 2);
  v.Require(s4.optimal(), "Example 1 step-1 program not solved");
  v.Require(worst <= 1e-6, "Gram identity residual");
  v.why << " b = " << Fmt(bval) << "; worst relative Gram residual " << Fmt(worst) << " over " << constraints
        << " constraints x 100 points";
  return v;
}

Verdict Criterion8() {
  Verdict v;
  const PolySystem sys = LoadSystem("toy.sys");
  const roa::PiecewiseMax r{{ParsePolynomial("x^2", sys.var_names)}};
  const bool expect[3] = {true, true, false};
  const double gammas[3] = {0.5, 0.9, 1.1};
  for (int k = 0; k < 3; ++k) {
    const bool general = roa::SolveStep1(sys, r, gammas[k], RunConfig{}).artifacts.has_value();
    const bool level =
        roa::SolveStep1(sys, r, gammas[k], RunConfig{}, {}, roa::Step1Mode::kLevelSet).artifacts.has_value();
    v.Require(general == level && general == expect[k], "gamma " + Fmt(gammas[k]));
    v.why << " gamma " << gammas[k] << ": general " << (general ? "feasible" : "infeasible") << ", level-set "
          << (level ? "feasible" : "infeasible") << ";";
  }
  return v;
}

}  // namespace

int main() {
  const std::vector<std::pair<int, std::function<Verdict()>>> criteria = {
      {1, Criterion1}, {2, Criterion2}, {3, Criterion3}, {4, Criterion4},
      {5, Criterion5}, {6, Criterion6}, {7, Criterion7}, {8, Criterion8}};
  bool all = true;
  for (const auto& [id, run] : criteria) {
    Verdict v;
    try {
      v = run();
    } catch (const std::exception& e) {
      v.pass = false;
      v.why << " exception: " << e.what();
    }
    all = all && v.pass;
    std::cout << "criterion " << id << ": " << (v.pass ? "PASS" : "FAIL") << " -" << v.why.str() << std::endl;
  }
  return all ? 0 : 1;
}
