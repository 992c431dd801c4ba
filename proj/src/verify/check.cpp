#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>

#include "attrakt/linalg.hpp"
#include "attrakt/verify.hpp"

namespace attrakt::verify {

using roa::EraCertificate;
using roa::Label;
using roa::PairLabel;

VerifyConfig VerifyConfig::From(const RunConfig& cfg) {
  VerifyConfig v;
  v.n_boundary = cfg.n_boundary;
  v.n_interior = cfg.n_interior;
  v.n_decrease = cfg.n_decrease;
  v.n_rational = cfg.n_rational;
  v.sim_t = cfg.sim_T;
  v.sim_dt = cfg.sim_dt;
  v.conv_tol = cfg.conv_tol;
  v.search_radius = cfg.search_radius;
  v.seed = cfg.seed;
  return v;
}

bool VerificationReport::pass() const {
  return !checks.empty() && std::all_of(checks.begin(), checks.end(), [](const CheckLine& c) { return c.pass; });
}

void VerificationReport::Print(std::ostream& os) const {
  for (const CheckLine& c : checks) os << (c.pass ? "PASS " : "FAIL ") << c.name << ": " << c.detail << "\n";
  os << (pass() ? "PASS" : "FAIL") << "\n";
}

namespace {

Polynomial Slack(double gamma, const Polynomial& r) { return Polynomial::Constant(r.nvars(), gamma) - r; }

const Polynomial& At(const std::vector<Polynomial>& v, int i, const Polynomial& zero) {
  return i < static_cast<int>(v.size()) ? v[i] : zero;
}

Polynomial Region(const EraCertificate& c, int i, std::string_view family) {
  Polynomial out(c.nvars());
  for (int j = 0; j < c.r.size(); ++j) {
    if (j == i) continue;
    auto it = c.s.find(PairLabel(family, i, j));
    if (it != c.s.end()) out += it->second * (c.r.pieces[i] - c.r.pieces[j]);
  }
  return out;
}

bool LevelSet(const EraCertificate& c) {
  return !c.piecewise() && c.v_n == c.r.pieces[0] && (c.m0.empty() || c.m0[0].is_zero());
}

double Scale(const Polynomial& p) { return std::max(1.0, p.max_abs_coefficient()); }

linalg::SymMatrix ToSym(const Eigen::MatrixXd& q) {
  const int n = static_cast<int>(q.rows());
  linalg::SymMatrix s(n);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c <= r; ++c) s(r, c) = 0.5 * (q(r, c) + q(c, r));
  return s;
}

struct Tally {
  double worst = 0.0;
  int violations = 0;
  std::vector<std::string> failed;
};

}  // namespace

std::vector<std::pair<std::string, Polynomial>> ConstraintExpressions(const PolySystem& sys,
                                                                      const EraCertificate& c) {
  const int n = c.nvars();
  const int d = c.r.size();
  const Polynomial zero(n);
  const Polynomial margin = c.eps_margin * Polynomial::SquaredNormPower(n, 1);
  const Polynomial vdot = LieDerivative(c.v_n, sys.f);
  std::vector<std::pair<std::string, Polynomial>> out;

  if (LevelSet(c)) {
    const Polynomial& r = c.r.pieces[0];
    out.emplace_back("a", -LieDerivative(r, sys.f) - At(c.p, 0, zero) * Slack(c.gamma, r) - margin);
    out.emplace_back("b", r - margin);
    return out;
  }
  for (int i = 0; i < d; ++i) {
    const Polynomial& ri = c.r.pieces[i];
    const Polynomial slack = Slack(c.gamma, ri);
    out.emplace_back(Label("a", i, d),
                     -LieDerivative(ri, sys.f) - At(c.p, i, zero) * slack - Region(c, i, "a") - margin);
    out.emplace_back(Label("b", i, d), c.v_n - At(c.m0, i, zero) * slack - Region(c, i, "b") - margin);
    out.emplace_back(Label("c", i, d), -vdot - At(c.m1, i, zero) * slack - Region(c, i, "c") - margin);
    if (c.has_rational())
      out.emplace_back(Label("r", i, d), -vdot + At(c.p, i, zero) * c.v_n - At(c.m2, i, zero) * slack -
                                             Region(c, i, "r") - margin);
  }
  return out;
}

VerificationReport CheckCertificate(const PolySystem& sys, const EraCertificate& cert, const VerifyConfig& vc) {
  VerificationReport rep;
  const int n = cert.nvars();
  const int d = cert.r.size();
  const double gamma = cert.gamma;
  const std::vector<double> origin(n, 0.0);
  std::mt19937_64 rng(vc.seed);
  auto line = [&](std::string name, bool ok, std::string detail) {
    rep.checks.push_back({std::move(name), ok, std::move(detail)});
  };
  auto fmt = [](double v) {
    std::ostringstream s;
    s.precision(3);
    s << v;
    return s.str();
  };
  auto sq = [](std::span<const double> z) {
    double s = 0.0;
    for (double v : z) s += v * v;
    return s;
  };

  if (sys.nvars() != n || d < 1) {
    line("shape", false, "certificate does not match the system");
    return rep;
  }

  // Origin strictly inside.
  const double r0 = cert.r.Evaluate(origin);
  rep.origin_interior = r0 < gamma - 1e-6 * std::abs(gamma);
  line("origin", rep.origin_interior, "R(0) = " + fmt(r0) + ", gamma = " + fmt(gamma));

  // Boundary: the field points strictly inward on every active piece.
  const BoundarySamples bs = SampleBoundary(cert.r, gamma, vc.n_boundary, vc.search_radius, rng);
  rep.boundary_requested = vc.n_boundary;
  rep.boundary_found = static_cast<int>(bs.points.size());
  const std::vector<std::vector<Polynomial>> grads = [&] {
    std::vector<std::vector<Polynomial>> g;
    for (const Polynomial& p : cert.r.pieces) g.push_back(p.Gradient());
    return g;
  }();
  for (const auto& z : bs.points) {
    const std::vector<double> fz = sys.Eval(z);
    bool bad = false;
    for (int i : cert.r.Active(z, 1e-9 * std::max(1.0, std::abs(gamma)))) {
      double lie = 0.0;
      for (int k = 0; k < n; ++k) lie += grads[i][k].Evaluate(z) * fz[k];
      rep.worst_boundary_lie = std::max(rep.worst_boundary_lie, lie);
      if (!(lie <= -0.5 * cert.eps_margin * sq(z)) || !(lie < 0.0)) bad = true;
    }
    rep.boundary_violations += bad;
  }
  line("boundary", rep.boundary_found > 0 && rep.boundary_violations == 0,
       std::to_string(rep.boundary_found) + "/" + std::to_string(rep.boundary_requested) + " points, " +
           std::to_string(rep.boundary_violations) + " violations, max <grad R, f> = " + fmt(rep.worst_boundary_lie));

  Box box = bs.points.empty() ? Box::Cube(n, vc.search_radius) : BoxAround(bs.points, 0.05);

  // Interior trajectories converge and never leave E(R, gamma).
  const auto starts = SampleSublevel(cert.r, vc.interior_level * gamma, box, vc.n_interior, rng);
  Rk4Options o;
  o.dt = vc.sim_dt;
  o.t_final = vc.sim_t;
  o.conv_tol = vc.conv_tol;
  o.stride = 0;
  o.escape_radius = 10.0 * box.Diagonal();
  const double invariance_tol = 1e-6 * std::max(1.0, std::abs(gamma));
  o.inside = [&](std::span<const double> x) { return cert.r.Evaluate(x) <= gamma + invariance_tol; };
  const auto trajs = vc.parallel ? SimulateBatch(sys, starts, o) : SimulateBatchSerial(sys, starts, o);
  rep.interior_samples = static_cast<int>(trajs.size());
  for (const Trajectory& t : trajs) {
    rep.interior_converged += t.status == TrajectoryStatus::kConverged;
    rep.containment_violations += t.left_set;
  }
  line("interior", rep.interior_samples > 0 && rep.interior_converged == rep.interior_samples,
       std::to_string(rep.interior_converged) + "/" + std::to_string(rep.interior_samples) +
           " trajectories reach |x| < " + fmt(vc.conv_tol) + " by t = " + fmt(vc.sim_t));
  line("invariance", rep.containment_violations == 0,
       std::to_string(rep.containment_violations) + " trajectories leave E(R, gamma)");

  // Gram matrices are PSD.
  auto psd = [&](const std::string& name, const sos::Gram& g, std::vector<std::string>& failed) {
    if (g.q.rows() == 0) return;
    const double e = linalg::MinEigenvalue(ToSym(g.q));
    rep.worst_gram_eigenvalue = std::min(rep.worst_gram_eigenvalue, e);
    if (!(e >= -vc.gram_tol)) {
      ++rep.gram_violations;
      failed.push_back(name);
    }
  };
  std::vector<std::string> bad_grams;
  for (const auto& [k, g] : cert.grams) psd(k, g, bad_grams);
  for (std::size_t l = 0; l < cert.m3_chain.size(); ++l) {
    psd("link" + std::to_string(l) + ".m3", cert.m3_chain[l].m3_gram, bad_grams);
    psd("link" + std::to_string(l), cert.m3_chain[l].gram, bad_grams);
  }
  std::string gdetail = "min eigenvalue " + fmt(rep.worst_gram_eigenvalue);
  for (const auto& b : bad_grams) gdetail += ", " + b;
  line("gram-psd", rep.gram_violations == 0, gdetail);

  // Every stored identity re-expands to the expression it certifies.
  Tally id;
  auto match = [&](const std::string& name, const Polynomial& expr, const sos::Gram* g) {
    double err;
    if (g == nullptr) {
      err = expr.is_zero() ? 0.0 : std::numeric_limits<double>::infinity();
    } else {
      err = (g->Expand(n) - expr).max_abs_coefficient() / Scale(expr);
    }
    id.worst = std::max(id.worst, err);
    if (!(err <= vc.identity_tol)) {
      ++id.violations;
      id.failed.push_back(name);
    }
  };
  auto gram = [&](const std::string& key) -> const sos::Gram* {
    auto it = cert.grams.find(key);
    return it == cert.grams.end() ? nullptr : &it->second;
  };
  for (const auto& [label, expr] : ConstraintExpressions(sys, cert)) {
    const sos::Gram* g = gram(label);
    if (g == nullptr) {
      ++id.violations;
      id.failed.push_back(label + " (missing)");
      continue;
    }
    match(label, expr, g);
  }
  const bool level_set = LevelSet(cert);
  for (int i = 0; i < d; ++i) {
    if (level_set) {
      if (!cert.p.empty()) match("p", cert.p[0], gram("p"));
      continue;
    }
    if (i < static_cast<int>(cert.m0.size())) match(Label("m0", i, d), cert.m0[i], gram(Label("m0", i, d)));
    if (i < static_cast<int>(cert.m1.size())) match(Label("m1", i, d), cert.m1[i], gram(Label("m1", i, d)));
    if (i < static_cast<int>(cert.m2.size())) match(Label("m2", i, d), cert.m2[i], gram(Label("m2", i, d)));
  }
  for (const auto& [key, poly] : cert.s) match("s_" + key, poly, gram("s_" + key));
  int link_failures = 0;
  for (std::size_t l = 0; l < cert.m3_chain.size(); ++l) {
    const roa::ContainmentLink& k = cert.m3_chain[l];
    const int before = id.violations;
    match("link" + std::to_string(l), Slack(k.gamma, k.r) - k.m3 * Slack(k.gamma_prev, k.r_prev), &k.gram);
    match("link" + std::to_string(l) + ".m3", k.m3, k.m3_gram.basis.empty() ? nullptr : &k.m3_gram);
    link_failures += id.violations > before;
  }
  rep.worst_identity_error = id.worst;
  rep.identity_violations = id.violations;
  std::string idetail = "max relative residual " + fmt(id.worst);
  for (const auto& b : id.failed) idetail += ", " + b;
  line("identities", id.violations == 0, idetail);
  line("m3-chain", link_failures == 0,
       std::to_string(cert.m3_chain.size()) + " links, " + std::to_string(link_failures) + " failing");

  // V_N decreases along f inside E(R, gamma).
  const std::vector<Polynomial> vgrad = cert.v_n.Gradient();
  const auto inside = SampleSublevel(cert.r, gamma, box, vc.n_decrease, rng);
  for (const auto& z : inside) {
    if (sq(z) < 1e-6) continue;
    ++rep.decrease_samples;
    const std::vector<double> fz = sys.Eval(z);
    double vd = 0.0;
    for (int k = 0; k < n; ++k) vd += vgrad[k].Evaluate(z) * fz[k];
    rep.decrease_violations += !(vd < 0.0);
  }
  line("decrease", rep.decrease_samples > 0 && rep.decrease_violations == 0,
       std::to_string(rep.decrease_violations) + "/" + std::to_string(rep.decrease_samples) +
           " samples with <grad V_N, f> >= 0");

  // Rational V is positive and decreasing along trajectories.
  if (cert.has_rational()) {
    rep.rational_checked = true;
    const auto rs = SampleSublevel(cert.r, vc.interior_level * gamma, box, vc.n_rational, rng);
    Rk4Options ro = o;
    ro.inside = nullptr;
    ro.stride = 1;
    const auto rt = vc.parallel ? SimulateBatch(sys, rs, ro) : SimulateBatchSerial(sys, rs, ro);
    rep.rational_trajectories = static_cast<int>(rt.size());
    for (const Trajectory& t : rt) {
      bool bad = false;
      double prev = std::numeric_limits<double>::infinity();
      for (int k = 0; k < t.size() && !bad; ++k) {
        const auto x = t.state(k, n);
        if (sq(x) < 1e-6) break;
        const double v = cert.RationalV(x);
        if (!(v > 0.0) || !std::isfinite(v) || !(v < prev)) bad = true;
        prev = v;
      }
      rep.rational_violations += bad;
    }
    line("rational", rep.rational_trajectories > 0 && rep.rational_violations == 0,
         std::to_string(rep.rational_violations) + "/" + std::to_string(rep.rational_trajectories) +
             " trajectories where V = V_N/(gamma - R) fails to decrease");
  }
  return rep;
}

}  // namespace attrakt::verify
