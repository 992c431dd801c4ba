#include "attrakt/sosprog.hpp"

#include <algorithm>
#include <limits>
#include <set>

namespace attrakt::sos {
namespace {

void AppendDegree(int nvars, int var, int remaining, std::vector<int>& exps, std::vector<Monomial>& out) {
  if (var == nvars - 1) {
    exps[var] = remaining;
    out.emplace_back(exps);
    return;
  }
  for (int e = remaining; e >= 0; --e) {
    exps[var] = e;
    AppendDegree(nvars, var + 1, remaining - e, exps, out);
  }
  exps[var] = 0;
}

void CheckNvars(int a, int b) {
  if (a != b) throw DimensionError("affine expression: " + std::to_string(a) + " vs " + std::to_string(b) + " variables");
}

Monomial Doubled(const Monomial& m) { return m * m; }

}  // namespace

std::vector<Monomial> MonomialBasis(int nvars, int deg_min, int deg_max) {
  if (nvars < 0 || deg_min < 0 || deg_min > deg_max) {
    throw std::invalid_argument("MonomialBasis: need 0 <= deg_min <= deg_max");
  }
  std::vector<Monomial> out;
  if (nvars == 0) {
    if (deg_min == 0) out.push_back(Monomial::One(0));
    return out;
  }
  std::vector<int> exps(nvars, 0);
  for (int d = deg_min; d <= deg_max; ++d) AppendDegree(nvars, 0, d, exps, out);
  return out;
}

Affine& Affine::operator+=(const Affine& other) {
  CheckNvars(nvars(), other.nvars());
  constant_ += other.constant_;
  for (const auto& [id, coeffs] : other.terms_) {
    auto it = terms_.find(id);
    if (it == terms_.end()) {
      terms_.emplace(id, coeffs);
      continue;
    }
    for (std::size_t j = 0; j < coeffs.size(); ++j) it->second[j] += coeffs[j];
  }
  return *this;
}

Affine& Affine::operator-=(const Affine& other) { return *this += -other; }

Affine& Affine::operator*=(double s) {
  constant_ *= s;
  for (auto& [id, coeffs] : terms_)
    for (auto& c : coeffs) c *= s;
  return *this;
}

Affine operator*(const Polynomial& p, const Affine& a) {
  CheckNvars(p.nvars(), a.nvars());
  Affine out(a.nvars());
  out.constant_ = p * a.constant_;
  for (const auto& [id, coeffs] : a.terms_) {
    auto& dst = out.terms_[id];
    dst.reserve(coeffs.size());
    for (const auto& c : coeffs) dst.push_back(p * c);
  }
  return out;
}

Affine operator*(const Affine& a, const Affine& b) {
  if (a.is_constant()) return a.constant_ * b;
  if (b.is_constant()) return b.constant_ * a;
  throw BilinearError("product of two expressions that both contain decision polynomials");
}

Affine Affine::Derivative(int index) const {
  Affine out(nvars());
  out.constant_ = constant_.Derivative(index);
  for (const auto& [id, coeffs] : terms_) {
    auto& dst = out.terms_[id];
    dst.reserve(coeffs.size());
    for (const auto& c : coeffs) dst.push_back(c.Derivative(index));
  }
  return out;
}

Affine LieDerivative(const Affine& e, const std::vector<Polynomial>& f) {
  CheckNvars(e.nvars(), static_cast<int>(f.size()));
  Affine out(e.nvars());
  for (int i = 0; i < e.nvars(); ++i) out += f[i] * e.Derivative(i);
  return out;
}

Polynomial Gram::Expand(int nvars) const {
  Polynomial::TermMap terms;
  for (std::size_t a = 0; a < basis.size(); ++a)
    for (std::size_t b = 0; b < basis.size(); ++b) terms[basis[a] * basis[b]] += q(a, b);
  return Polynomial(nvars, std::move(terms));
}

const Polynomial& SosSolution::value(DecisionPoly d) const {
  if (d.id < 0 || d.id >= static_cast<int>(values.size())) throw std::out_of_range("unknown decision polynomial");
  return values[d.id];
}

DecisionPoly SosProgram::NewFree(std::string name, std::vector<Monomial> basis) {
  Decision d{std::move(name), DecisionKind::kFree, std::move(basis), {}, {}};
  std::set<Monomial, GradedLex> seen;
  for (const Monomial& m : d.basis) {
    CheckNvars(nvars_, m.nvars());
    if (!seen.insert(m).second) throw std::invalid_argument("decision '" + d.name + "': repeated basis monomial");
    d.atoms.push_back(Polynomial::FromMonomial(m));
  }
  decisions_.push_back(std::move(d));
  return {static_cast<int>(decisions_.size()) - 1};
}

DecisionPoly SosProgram::NewSos(std::string name, std::vector<Monomial> gram_basis) {
  Decision d{std::move(name), DecisionKind::kSos, std::move(gram_basis), {}, {}};
  std::set<Monomial, GradedLex> seen;
  for (const Monomial& m : d.basis) {
    CheckNvars(nvars_, m.nvars());
    if (!seen.insert(m).second) throw std::invalid_argument("decision '" + d.name + "': repeated basis monomial");
  }
  const int n = static_cast<int>(d.basis.size());
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b <= a; ++b) {
      d.atoms.push_back(Polynomial::FromMonomial(d.basis[a] * d.basis[b], a == b ? 1.0 : 2.0));
      d.entries.emplace_back(a, b);
    }
  }
  decisions_.push_back(std::move(d));
  return {static_cast<int>(decisions_.size()) - 1};
}

Affine SosProgram::operator()(DecisionPoly d) const {
  const Decision& dec = decisions_.at(d.id);
  Affine out(nvars_);
  out.terms_[d.id] = dec.atoms;
  return out;
}

void SosProgram::CheckArity(const Affine& e) const {
  CheckNvars(nvars_, e.nvars());
  for (const auto& [id, coeffs] : e.terms()) {
    if (id < 0 || id >= num_decisions() || coeffs.size() != decisions_[id].atoms.size()) {
      throw std::invalid_argument("expression references a decision of another program");
    }
  }
}

int SosProgram::AddSos(std::string name, const Affine& expression) {
  CheckArity(expression);
  sos_.push_back({std::move(name), expression});
  return num_sos_constraints() - 1;
}

void SosProgram::AddZero(std::string name, const Affine& expression) {
  CheckArity(expression);
  zero_.push_back({std::move(name), expression});
}

void SosProgram::Minimize(std::vector<ObjectiveTerm> objective) {
  for (const ObjectiveTerm& t : objective) {
    const Decision& d = decisions_.at(t.decision.id);
    if (d.kind != DecisionKind::kFree) throw std::invalid_argument("objective on SOS decision '" + d.name + "'");
    if (std::find(d.basis.begin(), d.basis.end(), t.monomial) == d.basis.end()) {
      throw std::invalid_argument("objective monomial outside the basis of '" + d.name + "'");
    }
  }
  objective_ = std::move(objective);
}

std::vector<Monomial> SosProgram::GramBasis(const Affine& e, const std::string& name) const {
  std::set<Monomial, GradedLex> support, decision_support;
  for (const auto& [m, c] : e.constant().terms()) support.insert(m);
  for (const auto& [id, coeffs] : e.terms())
    for (const auto& c : coeffs)
      for (const auto& [m, v] : c.terms()) decision_support.insert(m);
  support.insert(decision_support.begin(), decision_support.end());
  if (support.empty()) return {};

  int min_deg = support.begin()->degree(), max_deg = support.rbegin()->degree();
  std::vector<int> lo(nvars_, std::numeric_limits<int>::max()), hi(nvars_, 0);
  for (const Monomial& m : support) {
    for (int i = 0; i < nvars_; ++i) {
      lo[i] = std::min(lo[i], m[i]);
      hi[i] = std::max(hi[i], m[i]);
    }
  }
  if (max_deg % 2 == 1) {
    for (const auto& [m, c] : e.constant().terms()) {
      if (m.degree() == max_deg && !decision_support.count(m)) {
        throw DegreeOverflow("constraint '" + name + "': known part has odd top degree " + std::to_string(max_deg));
      }
    }
  }

  // Newton-polytope bounds: total degree and per-variable exponent ranges.
  std::vector<Monomial> basis;
  for (const Monomial& m : MonomialBasis(nvars_, (min_deg + 1) / 2, max_deg / 2)) {
    bool ok = true;
    for (int i = 0; i < nvars_ && ok; ++i) ok = 2 * m[i] >= lo[i] && 2 * m[i] <= hi[i];
    if (ok) basis.push_back(m);
  }

  // Drop z when z^2 is outside the support and no other pair reaches it:
  // the diagonal Gram entry would be forced to zero.
  for (bool changed = true; changed;) {
    changed = false;
    for (std::size_t a = 0; a < basis.size(); ++a) {
      const Monomial sq = Doubled(basis[a]);
      if (support.count(sq)) continue;
      bool reached = false;
      for (std::size_t b = 0; b < basis.size() && !reached; ++b)
        for (std::size_t c = b + 1; c < basis.size() && !reached; ++c)
          reached = b != a && c != a && basis[b] * basis[c] == sq;
      if (!reached) {
        basis.erase(basis.begin() + static_cast<std::ptrdiff_t>(a));
        changed = true;
        break;
      }
    }
  }
  return basis;
}

sdp::SdpProblem SosProgram::Compile(IndexMap* index) const {
  IndexMap local;
  IndexMap& ix = index ? *index : local;
  ix = IndexMap{};
  ix.decisions.resize(decisions_.size());

  std::vector<bool> used(decisions_.size(), false);
  for (const auto* group : {&sos_, &zero_})
    for (const Constraint& c : *group)
      for (const auto& [id, coeffs] : c.expression.terms()) used[id] = true;
  for (const ObjectiveTerm& t : objective_) used[t.decision.id] = true;

  sdp::SdpProblem p;
  int n_free = 0;
  for (std::size_t k = 0; k < decisions_.size(); ++k) {
    if (used[k] && decisions_[k].kind == DecisionKind::kFree) {
      ix.decisions[k] = {true, 0, n_free};
      n_free += static_cast<int>(decisions_[k].basis.size());
    }
  }
  if (n_free > 0) p.blocks.push_back({sdp::BlockKind::kFree, n_free});
  auto add_square_block = [&](int n) {
    p.blocks.push_back({n == 1 ? sdp::BlockKind::kNonneg : sdp::BlockKind::kPsd, n});
    return static_cast<int>(p.blocks.size()) - 1;
  };
  for (std::size_t k = 0; k < decisions_.size(); ++k) {
    if (used[k] && decisions_[k].kind == DecisionKind::kSos && !decisions_[k].basis.empty()) {
      ix.decisions[k] = {true, add_square_block(static_cast<int>(decisions_[k].basis.size())), 0};
    }
  }

  // Scalar unknown j of decision k as an SDP entry with the given coefficient.
  auto unknown = [&](int k, int j, double coeff) -> sdp::Entry {
    const auto& slot = ix.decisions[k];
    const Decision& d = decisions_[k];
    if (d.kind == DecisionKind::kFree) return {slot.block, slot.offset + j, slot.offset + j, coeff};
    const auto [a, b] = d.entries[j];
    return {slot.block, a, b, a == b ? coeff : 0.5 * coeff};
  };

  auto emit_rows = [&](int cidx, const Affine& e, int gram_block, const std::vector<Monomial>& gram) {
    std::map<Monomial, std::pair<sdp::SparseBlockSym, double>, GradedLex> rows;
    for (const auto& [m, c] : e.constant().terms()) rows[m].second -= c;
    for (const auto& [id, coeffs] : e.terms()) {
      if (!ix.decisions[id].allocated) continue;  // empty SOS basis: identically zero
      for (std::size_t j = 0; j < coeffs.size(); ++j)
        for (const auto& [m, c] : coeffs[j].terms()) rows[m].first.push_back(unknown(id, static_cast<int>(j), c));
    }
    const int g = static_cast<int>(gram.size());
    for (int a = 0; a < g; ++a) {
      for (int b = 0; b <= a; ++b) {
        rows[gram[a] * gram[b]].first.push_back({gram_block, g == 1 ? 0 : a, g == 1 ? 0 : b, -1.0});
      }
    }
    for (auto& [m, row] : rows) {
      if (row.first.empty() && row.second == 0.0) continue;
      p.a.push_back(std::move(row.first));
      p.b.push_back(row.second);
      ix.rows.emplace_back(cidx, m);
    }
  };

  for (int c = 0; c < num_sos_constraints(); ++c) {
    std::vector<Monomial> basis = GramBasis(sos_[c].expression, sos_[c].name);
    const int block = basis.empty() ? -1 : add_square_block(static_cast<int>(basis.size()));
    ix.constraint_blocks.push_back(block);
    emit_rows(c, sos_[c].expression, block, basis);
    ix.gram_bases.push_back(std::move(basis));
  }
  for (std::size_t z = 0; z < zero_.size(); ++z) {
    emit_rows(num_sos_constraints() + static_cast<int>(z), zero_[z].expression, -1, {});
  }

  for (const ObjectiveTerm& t : objective_) {
    const Decision& d = decisions_[t.decision.id];
    const auto j = std::find(d.basis.begin(), d.basis.end(), t.monomial) - d.basis.begin();
    p.c.push_back(unknown(t.decision.id, static_cast<int>(j), t.weight));
  }
  return p;
}

SosSolution SosProgram::Solve(const sdp::Backend& backend, const sdp::SolverOptions& options) const {
  IndexMap ix;
  const sdp::SdpProblem problem = Compile(&ix);
  SosSolution sol;
  sol.raw = backend.Solve(problem, options);
  sol.status = sol.raw.status;
  const bool have_x = sol.raw.x.size() == problem.blocks.size();

  sol.values.assign(decisions_.size(), Polynomial(nvars_));
  sol.decision_grams.resize(decisions_.size());
  sol.unknowns.resize(decisions_.size());
  for (std::size_t k = 0; k < decisions_.size(); ++k) {
    const Decision& d = decisions_[k];
    const auto& slot = ix.decisions[k];
    Eigen::VectorXd theta = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d.atoms.size()));
    if (d.kind == DecisionKind::kSos) {
      sol.decision_grams[k].basis = d.basis;
      sol.decision_grams[k].q = Eigen::MatrixXd::Zero(d.basis.size(), d.basis.size());
    }
    if (slot.allocated && have_x) {
      const Eigen::MatrixXd& x = sol.raw.x[slot.block];
      if (d.kind == DecisionKind::kFree) {
        theta = x.col(0).segment(slot.offset, static_cast<Eigen::Index>(d.atoms.size()));
      } else {
        for (std::size_t j = 0; j < d.entries.size(); ++j) theta(j) = x(d.entries[j].first, d.entries[j].second);
        sol.decision_grams[k].q = x;
      }
    }
    Polynomial v(nvars_);
    for (std::size_t j = 0; j < d.atoms.size(); ++j) v += theta(j) * d.atoms[j];
    sol.values[k] = v;
    sol.unknowns[k] = theta;
  }
  sol.constraint_grams.resize(sos_.size());
  for (int c = 0; c < num_sos_constraints(); ++c) {
    sol.constraint_grams[c].basis = ix.gram_bases[c];
    const int block = ix.constraint_blocks[c];
    sol.constraint_grams[c].q = block >= 0 && have_x ? sol.raw.x[block]
                                                     : Eigen::MatrixXd::Zero(ix.gram_bases[c].size(), ix.gram_bases[c].size());
  }
  return sol;
}

SosSolution SosProgram::Solve(const sdp::SolverOptions& options) const {
  return Solve(*sdp::BackendFromEnvironment(), options);
}

Polynomial SosProgram::Evaluate(const Affine& e, const SosSolution& sol) const {
  CheckArity(e);
  Polynomial out = e.constant();
  for (const auto& [id, coeffs] : e.terms())
    for (std::size_t j = 0; j < coeffs.size(); ++j) out += sol.unknowns[id](static_cast<Eigen::Index>(j)) * coeffs[j];
  return out;
}

}  // namespace attrakt::sos
