#include "attrakt/roa.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <ostream>
#include <utility>

#include "attrakt/linalg.hpp"

namespace attrakt::roa {

using sos::Affine;
using sos::DecisionPoly;

int PiecewiseMax::degree() const {
  int d = -1;
  for (const Polynomial& q : pieces) d = std::max(d, q.degree());
  return d;
}

double PiecewiseMax::Evaluate(std::span<const double> x) const {
  double v = -std::numeric_limits<double>::infinity();
  for (const Polynomial& q : pieces) v = std::max(v, q.Evaluate(x));
  return v;
}

std::vector<int> PiecewiseMax::Active(std::span<const double> x, double tol) const {
  const double top = Evaluate(x);
  std::vector<int> out;
  for (int i = 0; i < size(); ++i)
    if (pieces[i].Evaluate(x) >= top - tol) out.push_back(i);
  return out;
}

double EraCertificate::RationalV(std::span<const double> x) const {
  const double d = gamma - r.Evaluate(x);
  if (!(d > 0.0)) return std::numeric_limits<double>::infinity();
  return v_n.Evaluate(x) / d;
}

std::string Label(std::string_view name, int piece, int num_pieces) {
  std::string out(name);
  if (num_pieces > 1) out += "[" + std::to_string(piece + 1) + "]";
  return out;
}

std::string PairLabel(std::string_view name, int i, int j) {
  return std::string(name) + "[" + std::to_string(i + 1) + "," + std::to_string(j + 1) + "]";
}

int EvenCeil(int x) { return x <= 0 ? 0 : x + (x % 2); }

namespace {

int FieldDegree(const PolySystem& sys) {
  int d = 1;
  for (const Polynomial& f : sys.f) d = std::max(d, f.degree());
  return d;
}

int DegreeOr(const RunConfig& cfg, const char* name, int fallback) {
  const int v = cfg.MultiplierDegree(name);
  return v >= 0 ? v : fallback;
}

std::vector<Monomial> Basis(int n, int lo, int hi) {
  if (hi < lo) return {};
  return sos::MonomialBasis(n, lo, hi);
}

/// SOS multiplier of degree `deg` whose Gram basis starts at `lo`; absent
/// (id -1) when the basis is empty.
DecisionPoly NewMultiplier(sos::SosProgram& prog, const std::string& name, int deg, int lo) {
  auto basis = Basis(prog.nvars(), lo, deg / 2);
  if (basis.empty()) return {};
  return prog.NewSos(name, std::move(basis));
}

Affine Term(const sos::SosProgram& prog, DecisionPoly d) {
  return d.id < 0 ? Affine(prog.nvars()) : prog(d);
}

Polynomial ValueOr(const sos::SosSolution& sol, DecisionPoly d, int nvars) {
  return d.id < 0 ? Polynomial(nvars) : sol.value(d);
}

sdp::SolverOptions SolverOptionsFrom(const RunConfig& cfg) {
  sdp::SolverOptions o;
  o.tol_feas = cfg.tol_feas;
  o.tol_gap = cfg.tol_gap;
  o.max_iters = cfg.max_iters;
  return o;
}

sos::SosSolution Run(const sos::SosProgram& prog, const RunConfig& cfg, const Context& ctx) {
  std::unique_ptr<sdp::Backend> owned;
  const sdp::Backend* backend = ctx.backend;
  if (!backend) {
    owned = sdp::BackendFromEnvironment();
    backend = owned.get();
  }
  return prog.Solve(*backend, SolverOptionsFrom(cfg));
}

/// Grams of every SOS decision with a non-empty basis, keyed by decision name.
void CollectMultiplierGrams(const sos::SosProgram& prog, const sos::SosSolution& sol,
                            std::map<std::string, sos::Gram>& out) {
  for (int id = 0; id < prog.num_decisions(); ++id) {
    const sos::Gram& g = sol.decision_grams[id];
    if (!g.basis.empty()) out[prog.decision_name(DecisionPoly{id})] = g;
  }
}

void CollectConstraintGrams(const std::map<std::string, int>& constraints, const sos::SosSolution& sol,
                            std::map<std::string, sos::Gram>& out) {
  for (const auto& [label, idx] : constraints) out[label] = sol.constraint_grams[idx];
}

/// Region terms sum_{j != i} s_ij (R_i - R_j) for one condition family.
Affine RegionTerms(sos::SosProgram& prog, const PiecewiseMax& r, int i, std::string_view family, int deg_s,
                   std::map<std::string, DecisionPoly>& s) {
  Affine out(prog.nvars());
  for (int j = 0; j < r.size(); ++j) {
    if (j == i) continue;
    const std::string key = PairLabel(family, i, j);
    const DecisionPoly d = NewMultiplier(prog, "s_" + key, deg_s, 0);
    if (d.id < 0) continue;
    s[key] = d;
    out += (r.pieces[i] - r.pieces[j]) * prog(d);
  }
  return out;
}

std::ostream* Log(const Context& ctx) { return ctx.log; }

/// V_N - c - kappa |x|^deg_vn is SOS with deg c < deg_vn, so V_N is radially
/// unbounded and usable as a later R_0.
void AddRadialGrowth(sos::SosProgram& prog, const Affine& v, const RunConfig& cfg) {
  const int n = prog.nvars();
  const int k = std::max(1, cfg.deg_vn / 2);
  const DecisionPoly c = prog.NewFree("c_V", Basis(n, 0, 2 * k - 1));
  prog.AddSos("growth", v - prog(c) - Affine(cfg.kappa * Polynomial::SquaredNormPower(n, k)));
}

/// gamma - r
Polynomial Slack(double gamma, const Polynomial& r) { return Polynomial::Constant(r.nvars(), gamma) - r; }

}  // namespace

ConditionProgram Step1Conditions(const PolySystem& sys, const PiecewiseMax& r, double gamma, const RunConfig& cfg,
                                 Step1Mode mode) {
  const int n = sys.nvars();
  const int d = r.size();
  if (d < 1) throw std::invalid_argument("at least one piece is required");
  if (mode == Step1Mode::kLevelSet && d != 1) throw std::invalid_argument("level-set mode needs a single piece");
  for (const Polynomial& q : r.pieces)
    if (q.nvars() != n) throw std::invalid_argument("piece arity differs from the system");

  ConditionProgram cp(n);
  cp.mode = mode;
  sos::SosProgram& prog = cp.prog;
  const int df = FieldDegree(sys);
  const int deg_s = DegreeOr(cfg, "s", r.degree());
  const Polynomial margin = cfg.eps_margin * Polynomial::SquaredNormPower(n, 1);

  if (mode == Step1Mode::kLevelSet) {
    const Polynomial& rr = r.pieces[0];
    const int dp = DegreeOr(cfg, "p", EvenCeil(df - 1));
    const DecisionPoly p = NewMultiplier(prog, "p", dp, 1);
    cp.p = {p};
    cp.m0 = {DecisionPoly{}};
    cp.m1 = {p};
    const Affine a = Affine(-LieDerivative(rr, sys.f)) - Term(prog, p) * Slack(gamma, rr) - Affine(margin);
    cp.constraints["a"] = prog.AddSos("a", a);
    cp.constraints["b"] = prog.AddSos("b", Affine(rr - margin));
    return cp;
  }

  const int dv = cfg.deg_vn;
  const DecisionPoly vn = prog.NewFree("V_N", Basis(n, 2, dv));
  cp.v_n = vn;
  const Affine v = prog(vn);
  const Affine vdot = sos::LieDerivative(v, sys.f);
  AddRadialGrowth(prog, v, cfg);

  for (int i = 0; i < d; ++i) {
    const Polynomial& ri = r.pieces[i];
    const int dr = ri.degree();
    const Polynomial slack = Slack(gamma, ri);

    const int dp = DegreeOr(cfg, "p", EvenCeil(df - 1));
    const DecisionPoly p = prog.NewFree(Label("p", i, d), Basis(n, 0, dp));
    const DecisionPoly m0 = NewMultiplier(prog, Label("m0", i, d), DegreeOr(cfg, "m0", EvenCeil(dv - dr)), 1);
    const DecisionPoly m1 =
        NewMultiplier(prog, Label("m1", i, d), DegreeOr(cfg, "m1", EvenCeil(dv + df - 1 - dr)), 1);
    cp.p.push_back(p);
    cp.m0.push_back(m0);
    cp.m1.push_back(m1);

    const Affine a = Affine(-LieDerivative(ri, sys.f)) - prog(p) * slack -
                     RegionTerms(prog, r, i, "a", deg_s, cp.s) - Affine(margin);
    const Affine b = v - Term(prog, m0) * slack - RegionTerms(prog, r, i, "b", deg_s, cp.s) - Affine(margin);
    const Affine c = -vdot - Term(prog, m1) * slack - RegionTerms(prog, r, i, "c", deg_s, cp.s) - Affine(margin);
    cp.constraints[Label("a", i, d)] = prog.AddSos(Label("a", i, d), a);
    cp.constraints[Label("b", i, d)] = prog.AddSos(Label("b", i, d), b);
    cp.constraints[Label("c", i, d)] = prog.AddSos(Label("c", i, d), c);
  }
  return cp;
}

ConditionProgram Step1Conditions(const PolySystem& sys, const Polynomial& r, double gamma, const RunConfig& cfg,
                                 Step1Mode mode) {
  return Step1Conditions(sys, PiecewiseMax{{r}}, gamma, cfg, mode);
}

Probe SolveStep1(const PolySystem& sys, const PiecewiseMax& r, double gamma, const RunConfig& cfg,
                 const Context& ctx, Step1Mode mode) {
  const ConditionProgram cp = Step1Conditions(sys, r, gamma, cfg, mode);
  const sos::SosSolution sol = Run(cp.prog, cfg, ctx);
  Probe out;
  out.status = sol.status;
  if (!sol.optimal()) return out;

  const int n = sys.nvars();
  Step1Artifacts a;
  a.gamma = gamma;
  a.r = r;
  a.v_n = cp.v_n ? sol.value(*cp.v_n) : r.pieces[0];
  for (int i = 0; i < r.size(); ++i) {
    a.p.push_back(ValueOr(sol, cp.p[i], n));
    a.m0.push_back(ValueOr(sol, cp.m0[i], n));
    a.m1.push_back(ValueOr(sol, cp.m1[i], n));
  }
  for (const auto& [key, dp] : cp.s) a.s[key] = sol.value(dp);
  CollectMultiplierGrams(cp.prog, sol, a.grams);
  CollectConstraintGrams(cp.constraints, sol, a.grams);
  if (mode == Step1Mode::kLevelSet && a.grams.count("p")) a.grams["m1"] = a.grams["p"];
  out.artifacts = std::move(a);
  return out;
}

namespace {

struct SearchStats {
  int infeasible = 0;
  int unproven = 0;
};

/// Bracketing plus bisection over gamma. `probe` returns the artifacts of
/// a certified level or nullopt.
template <class T, class F>
std::optional<std::pair<double, T>> SearchGamma(F&& probe, const RunConfig& cfg,
                                                std::optional<std::pair<double, T>> known) {
  double lo = 0.0;
  double hi = std::numeric_limits<double>::infinity();
  std::optional<T> best;
  auto attempt = [&](double g) {
    auto r = probe(g);
    if (r) {
      lo = g;
      best = std::move(r);
      return true;
    }
    hi = std::min(hi, g);
    return false;
  };

  if (known) {
    lo = known->first;
    best = std::move(known->second);
  } else {
    double g = std::clamp(1.0, cfg.gamma_lo, cfg.gamma_hi);
    for (int h = 0; h <= 40 && g >= cfg.gamma_lo; ++h, g *= 0.5) {
      if (attempt(g)) break;
    }
    if (!best) return std::nullopt;
  }
  if (!std::isfinite(hi)) {
    while (lo < cfg.gamma_hi) {
      if (!attempt(std::min(2.0 * lo, cfg.gamma_hi))) break;
    }
    if (lo >= cfg.gamma_hi) return std::make_pair(lo, std::move(*best));
  }
  while ((hi - lo) / hi > cfg.bisect_tol) {
    const double mid = hi / lo > 4.0 ? std::sqrt(lo * hi) : 0.5 * (lo + hi);
    attempt(mid);
  }
  return std::make_pair(lo, std::move(*best));
}

void Record(SearchStats& stats, sdp::SolveStatus s) {
  if (s == sdp::SolveStatus::kPrimalInfeasible || s == sdp::SolveStatus::kDualInfeasible) {
    ++stats.infeasible;
  } else if (s != sdp::SolveStatus::kOptimal) {
    ++stats.unproven;
  }
}

void LogProbe(const Context& ctx, std::string_view what, double gamma, sdp::SolveStatus s) {
  if (!Log(ctx)) return;
  *Log(ctx) << what << " gamma=" << FormatDouble(gamma) << " " << sdp::ToString(s);
  if (s == sdp::SolveStatus::kMaxIterations) *Log(ctx) << " (treated as not proven)";
  *Log(ctx) << '\n';
}

}  // namespace

Step1Artifacts Step1MaximizeGamma(const PolySystem& sys, const PiecewiseMax& r, const RunConfig& cfg,
                                  const Context& ctx, std::optional<Step1Artifacts> known, Step1Mode mode) {
  SearchStats stats;
  auto probe = [&](double g) -> std::optional<Step1Artifacts> {
    Probe p = SolveStep1(sys, r, g, cfg, ctx, mode);
    LogProbe(ctx, "step1", g, p.status);
    Record(stats, p.status);
    return std::move(p.artifacts);
  };
  std::optional<std::pair<double, Step1Artifacts>> start;
  if (known) start.emplace(known->gamma, std::move(*known));
  auto found = SearchGamma<Step1Artifacts>(probe, cfg, std::move(start));
  if (!found) {
    if (stats.infeasible == 0 && stats.unproven > 0)
      throw SolverFailure("no level could be certified: every probe ended without a solver verdict");
    throw NotCertifiable("origin not certifiably stable: no certified level down to gamma_lo");
  }
  return std::move(found->second);
}

Step2Result Step2UpdateR(const PolySystem& sys, const Step1Artifacts& step1, const RunConfig& cfg,
                         const CompactnessSpec& compactness, const Context& ctx, const Enclosure* enclose) {
  if (step1.r.size() != 1) throw std::invalid_argument("Step 2 needs a single piece");
  const int n = sys.nvars();
  const Polynomial& r_hat = step1.r.pieces[0];
  const int dr = std::max(cfg.deg_r, r_hat.degree());
  const Polynomial margin = cfg.eps_margin * Polynomial::SquaredNormPower(n, 1);
  const Polynomial& p = step1.p[0];
  const Polynomial& m0 = step1.m0[0];
  const Polynomial& m1 = step1.m1[0];

  struct Found {
    Step1Artifacts artifacts;
    ContainmentLink link;
    std::optional<ContainmentLink> enclose_link;
  };
  SearchStats stats;
  auto probe = [&](double gamma) -> std::optional<Found> {
    sos::SosProgram prog(n);
    const DecisionPoly rd = prog.NewFree("R", Basis(n, 1, dr));
    const DecisionPoly vn = prog.NewFree("V_N", Basis(n, 2, cfg.deg_vn));
    const DecisionPoly m3 = NewMultiplier(prog, "m3", DegreeOr(cfg, "m3", EvenCeil(dr - r_hat.degree())), 0);
    const DecisionPoly c = prog.NewFree("c", Basis(n, 0, 2 * compactness.k - 1));
    const Affine R = prog(rd);
    const Affine V = prog(vn);
    AddRadialGrowth(prog, V, cfg);
    const Affine slack = Affine(Polynomial::Constant(n, gamma)) - R;

    std::map<std::string, int> cons;
    cons["a"] = prog.AddSos("a", -sos::LieDerivative(R, sys.f) - p * slack - Affine(margin));
    cons["b"] = prog.AddSos("b", V - m0 * slack - Affine(margin));
    cons["c"] = prog.AddSos("c", -sos::LieDerivative(V, sys.f) - m1 * slack - Affine(margin));
    cons["contain"] = prog.AddSos("contain", slack - Term(prog, m3) * Slack(gamma, r_hat));
    cons["compact"] = prog.AddSos(
        "compact", R - prog(c) - Affine(compactness.kappa * Polynomial::SquaredNormPower(n, compactness.k)));
    DecisionPoly m3e;
    if (enclose) {
      m3e = NewMultiplier(prog, "m3e", DegreeOr(cfg, "m3", EvenCeil(dr - enclose->r.degree())), 0);
      cons["enclose"] = prog.AddSos("enclose", slack - Term(prog, m3e) * Slack(enclose->gamma, enclose->r));
    }

    const sos::SosSolution sol = Run(prog, cfg, ctx);
    LogProbe(ctx, "step2", gamma, sol.status);
    Record(stats, sol.status);
    if (!sol.optimal()) return std::nullopt;

    Found f;
    Step1Artifacts& a = f.artifacts;
    a.gamma = gamma;
    a.r = PiecewiseMax{{sol.value(rd)}};
    a.v_n = sol.value(vn);
    a.p = step1.p;
    a.m0 = step1.m0;
    a.m1 = step1.m1;
    for (const char* key : {"m0", "m1"})
      if (auto it = step1.grams.find(key); it != step1.grams.end()) a.grams[key] = it->second;
    for (const char* key : {"a", "b", "c"}) a.grams[key] = sol.constraint_grams[cons.at(key)];

    ContainmentLink& l = f.link;
    l.r_prev = r_hat;
    l.gamma_prev = gamma;
    l.r = a.r.pieces[0];
    l.gamma = gamma;
    l.m3 = ValueOr(sol, m3, n);
    if (m3.id >= 0) l.m3_gram = sol.decision_grams[m3.id];
    l.gram = sol.constraint_grams[cons.at("contain")];
    if (enclose) {
      ContainmentLink e;
      e.r_prev = enclose->r;
      e.gamma_prev = enclose->gamma;
      e.r = l.r;
      e.gamma = gamma;
      e.m3 = ValueOr(sol, m3e, n);
      if (m3e.id >= 0) e.m3_gram = sol.decision_grams[m3e.id];
      e.gram = sol.constraint_grams[cons.at("enclose")];
      f.enclose_link = std::move(e);
    }
    return f;
  };

  Found identity;
  identity.artifacts = step1;
  std::optional<std::pair<double, Found>> start;
  start.emplace(step1.gamma, std::move(identity));
  auto found = SearchGamma<Found>(probe, cfg, std::move(start));

  Step2Result out;
  out.fixed_point = !(found->first > step1.gamma);
  out.artifacts = std::move(found->second.artifacts);
  out.link = std::move(found->second.link);
  out.enclose_link = std::move(found->second.enclose_link);
  return out;
}

std::optional<RationalLf> RecoverRationalLf(const PolySystem& sys, const PiecewiseMax& r, double gamma,
                                            const std::vector<Polynomial>& p, const RunConfig& cfg,
                                            const Context& ctx) {
  const int n = sys.nvars();
  const int d = r.size();
  if (static_cast<int>(p.size()) != d) throw std::invalid_argument("one p per piece is required");
  const int df = FieldDegree(sys);
  const int dv = cfg.deg_vn;
  const int deg_s = DegreeOr(cfg, "s", r.degree());
  const Polynomial margin = cfg.eps_margin * Polynomial::SquaredNormPower(n, 1);

  sos::SosProgram prog(n);
  const DecisionPoly vn = prog.NewFree("V_N", Basis(n, 2, dv));
  const Affine v = prog(vn);
  const Affine vdot = sos::LieDerivative(v, sys.f);
  AddRadialGrowth(prog, v, cfg);
  std::vector<DecisionPoly> m0s, m1s, m2s;
  std::map<std::string, DecisionPoly> s;
  std::map<std::string, int> cons;
  for (int i = 0; i < d; ++i) {
    const Polynomial& ri = r.pieces[i];
    const int dr = ri.degree();
    const Polynomial slack = Slack(gamma, ri);
    const DecisionPoly m0 = NewMultiplier(prog, Label("m0", i, d), DegreeOr(cfg, "m0", EvenCeil(dv - dr)), 1);
    const DecisionPoly m1 =
        NewMultiplier(prog, Label("m1", i, d), DegreeOr(cfg, "m1", EvenCeil(dv + df - 1 - dr)), 1);
    const int top = std::max(dv + df - 1, dv + std::max(p[i].degree(), 0));
    const DecisionPoly m2 = NewMultiplier(prog, Label("m2", i, d), DegreeOr(cfg, "m2", EvenCeil(top - dr)), 1);
    m0s.push_back(m0);
    m1s.push_back(m1);
    m2s.push_back(m2);
    const Affine b = v - Term(prog, m0) * slack - RegionTerms(prog, r, i, "b", deg_s, s) - Affine(margin);
    const Affine c = -vdot - Term(prog, m1) * slack - RegionTerms(prog, r, i, "c", deg_s, s) - Affine(margin);
    const Affine rat = -vdot + p[i] * v - Term(prog, m2) * slack - RegionTerms(prog, r, i, "r", deg_s, s) -
                       Affine(margin);
    cons[Label("b", i, d)] = prog.AddSos(Label("b", i, d), b);
    cons[Label("c", i, d)] = prog.AddSos(Label("c", i, d), c);
    cons[Label("r", i, d)] = prog.AddSos(Label("r", i, d), rat);
  }

  const sos::SosSolution sol = Run(prog, cfg, ctx);
  LogProbe(ctx, "rational", gamma, sol.status);
  if (!sol.optimal()) return std::nullopt;

  RationalLf lf;
  lf.v_n = sol.value(vn);
  for (int i = 0; i < d; ++i) {
    lf.m0.push_back(ValueOr(sol, m0s[i], n));
    lf.m1.push_back(ValueOr(sol, m1s[i], n));
    lf.m2.push_back(ValueOr(sol, m2s[i], n));
  }
  for (const auto& [key, dp] : s) lf.s[key] = sol.value(dp);
  CollectMultiplierGrams(prog, sol, lf.grams);
  CollectConstraintGrams(cons, sol, lf.grams);
  return lf;
}

void AttachRational(EraCertificate& cert, const RationalLf& lf) {
  cert.v_n = lf.v_n;
  cert.m0 = lf.m0;
  cert.m1 = lf.m1;
  cert.m2 = lf.m2;
  for (auto it = cert.s.begin(); it != cert.s.end();) {
    const char family = it->first.front();
    it = (family == 'b' || family == 'c') ? cert.s.erase(it) : std::next(it);
  }
  for (const auto& [key, value] : lf.s) cert.s[key] = value;
  for (auto it = cert.grams.begin(); it != cert.grams.end();) {
    const std::string& k = it->first;
    const bool stale = k.rfind("b", 0) == 0 || k.rfind("c", 0) == 0 || k.rfind("m0", 0) == 0 ||
                       k.rfind("m1", 0) == 0 || k.rfind("s_b", 0) == 0 || k.rfind("s_c", 0) == 0;
    it = stale ? cert.grams.erase(it) : std::next(it);
  }
  for (const auto& [key, g] : lf.grams) cert.grams[key] = g;
}

EraCertificate MakeCertificate(const PolySystem& sys, const Step1Artifacts& a, const RunConfig& cfg,
                               int iteration) {
  EraCertificate c;
  c.var_names = sys.var_names;
  c.r = a.r;
  c.gamma = a.gamma;
  c.v_n = a.v_n;
  c.p = a.p;
  c.m0 = a.m0;
  c.m1 = a.m1;
  c.s = a.s;
  c.grams = a.grams;
  c.eps_margin = cfg.eps_margin;
  c.iteration = iteration;
  c.config = cfg.Entries();
  return c;
}

Polynomial QuadraticInitializer(const PolySystem& sys) {
  const auto pm = linalg::SolveLyapunov(linalg::Linearize(sys));
  if (!pm) throw NotCertifiable("origin not certifiably stable: the linearization is not Hurwitz");
  const int n = sys.nvars();
  Polynomial r(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) r += (*pm)(i, j) * Polynomial::Var(n, i) * Polynomial::Var(n, j);
  return r;
}

namespace {

/// m3 with (gamma - r) - m3 (gamma_prev - r_prev) SOS, all else fixed.
std::optional<ContainmentLink> FixedLink(const Polynomial& r_prev, double gamma_prev, const Polynomial& r,
                                         double gamma, const RunConfig& cfg, const Context& ctx) {
  const int n = r.nvars();
  sos::SosProgram prog(n);
  const DecisionPoly m3 =
      NewMultiplier(prog, "m3", DegreeOr(cfg, "m3", EvenCeil(r.degree() - r_prev.degree())), 0);
  const int con = prog.AddSos("contain", Affine(Slack(gamma, r)) - Term(prog, m3) * Slack(gamma_prev, r_prev));
  const sos::SosSolution sol = Run(prog, cfg, ctx);
  LogProbe(ctx, "seed-link", gamma, sol.status);
  if (!sol.optimal()) return std::nullopt;
  ContainmentLink l;
  l.r_prev = r_prev;
  l.gamma_prev = gamma_prev;
  l.r = r;
  l.gamma = gamma;
  l.m3 = ValueOr(sol, m3, n);
  if (m3.id >= 0) l.m3_gram = sol.decision_grams[m3.id];
  l.gram = sol.constraint_grams[con];
  return l;
}

}  // namespace

std::vector<EraCertificate> Algorithm3(const PolySystem& sys, const RunConfig& cfg, const Context& ctx,
                                       const EraCertificate* seed) {
  Polynomial r0(sys.nvars());
  std::vector<ContainmentLink> chain;
  if (seed) {
    if (seed->nvars() != sys.nvars()) throw std::invalid_argument("seed certificate dimension differs");
    r0 = seed->v_n * (1.0 / std::max(seed->v_n.max_abs_coefficient(), 1e-300));
    chain = seed->m3_chain;
  } else {
    r0 = QuadraticInitializer(sys);
  }

  Step1Artifacts s1 = Step1MaximizeGamma(sys, PiecewiseMax{{r0}}, cfg, ctx);

  std::vector<EraCertificate> out;
  out.push_back(MakeCertificate(sys, s1, cfg, 0));
  out.back().m3_chain = chain;

  const int dr = std::max(cfg.deg_r, r0.degree());
  const CompactnessSpec compact{cfg.kappa, cfg.k_compact > 0 ? cfg.k_compact : std::max(1, dr / 2)};
  int slow = 0;
  for (int k = 1; k <= cfg.max_outer_iters; ++k) {
    Step2Result s2;
    if (k == 1 && seed && !seed->piecewise()) {
      const Enclosure enc{seed->r.pieces[0], seed->gamma};
      s2 = Step2UpdateR(sys, s1, cfg, compact, ctx, &enc);
      if (s2.fixed_point && Log(ctx)) *Log(ctx) << "no update encloses the seed estimate\n";
    }
    if (!s2.enclose_link) s2 = Step2UpdateR(sys, s1, cfg, compact, ctx);
    if (s2.fixed_point) {
      if (Log(ctx)) *Log(ctx) << "iteration " << k << ": fixed point\n";
      break;
    }
    chain.push_back(s2.link);
    if (s2.enclose_link) chain.push_back(*s2.enclose_link);
    const PiecewiseMax r_new = s2.artifacts.r;
    Step1Artifacts next = Step1MaximizeGamma(sys, r_new, cfg, ctx, std::move(s2.artifacts));
    const double gain = (next.gamma - s1.gamma) / next.gamma;
    s1 = std::move(next);
    out.push_back(MakeCertificate(sys, s1, cfg, k));
    out.back().m3_chain = chain;
    if (Log(ctx)) *Log(ctx) << "iteration " << k << ": gamma=" << FormatDouble(s1.gamma) << '\n';
    slow = gain < cfg.stop_tol ? slow + 1 : 0;
    if (slow >= 2) break;
  }
  if (seed && !seed->piecewise()) {
    EraCertificate& last = out.back();
    if (auto link = FixedLink(seed->r.pieces[0], seed->gamma, last.r.pieces[0], last.gamma, cfg, ctx)) {
      last.m3_chain.push_back(std::move(*link));
    } else if (Log(ctx)) {
      *Log(ctx) << "no containment certificate from the seed estimate\n";
    }
  }
  return out;
}

EraCertificate PiecewiseEra(const PolySystem& sys, const PiecewiseMax& pieces, const RunConfig& cfg,
                            const Context& ctx) {
  Step1Artifacts s1 = Step1MaximizeGamma(sys, pieces, cfg, ctx);
  EraCertificate cert = MakeCertificate(sys, s1, cfg, 0);
  if (auto lf = RecoverRationalLf(sys, pieces, s1.gamma, s1.p, cfg, ctx)) AttachRational(cert, *lf);
  return cert;
}

}  // namespace attrakt::roa
