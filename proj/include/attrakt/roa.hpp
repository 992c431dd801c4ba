#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "attrakt/polynomial.hpp"
#include "attrakt/sdp.hpp"
#include "attrakt/sosprog.hpp"
#include "attrakt/sysparse.hpp"

namespace attrakt::roa {

/// No certificate exists at the smallest admissible level (or the
/// linearization is not Hurwitz).
class NotCertifiable : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Every probe failed for numerical reasons rather than by proven
/// infeasibility.
class SolverFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// R_M(x) = max_i R_i(x).
struct PiecewiseMax {
  std::vector<Polynomial> pieces;

  int nvars() const { return pieces.empty() ? 0 : pieces.front().nvars(); }
  int size() const { return static_cast<int>(pieces.size()); }
  int degree() const;
  double Evaluate(std::span<const double> x) const;
  /// Indices whose value is within tol of the maximum.
  std::vector<int> Active(std::span<const double> x, double tol) const;
};

/// Proof that E(r_prev, gamma_prev) lies inside E(r, gamma):
/// (gamma - r) - m3 (gamma_prev - r_prev) is SOS with m3 SOS.
struct ContainmentLink {
  Polynomial r_prev;
  double gamma_prev = 0.0;
  Polynomial r;
  double gamma = 0.0;
  Polynomial m3;
  sos::Gram m3_gram;
  sos::Gram gram;
};

/// Everything needed to re-check an estimate E(R_M, gamma). Per-piece
/// vectors have one entry for a plain R. Region multipliers live in `s`
/// keyed "a[i,j]", "b[i,j]", "c[i,j]", "r[i,j]" (1-based pieces). Grams are
/// keyed by constraint or multiplier label, see Label().
struct EraCertificate {
  std::vector<std::string> var_names;
  PiecewiseMax r;
  double gamma = 0.0;
  Polynomial v_n;
  std::vector<Polynomial> p, m0, m1, m2;
  std::map<std::string, Polynomial> s;
  std::vector<ContainmentLink> m3_chain;
  std::map<std::string, sos::Gram> grams;
  double eps_margin = 0.0;
  int iteration = 0;
  std::vector<std::pair<std::string, std::string>> config;

  int nvars() const { return static_cast<int>(var_names.size()); }
  bool piecewise() const { return r.size() > 1; }
  bool has_rational() const { return !m2.empty(); }
  /// V_N(x) / (gamma - R_M(x)); +inf outside E°(R_M, gamma).
  double RationalV(std::span<const double> x) const;
};

/// "name" for a single piece, "name[i+1]" otherwise.
std::string Label(std::string_view name, int piece, int num_pieces);
/// "name[i+1,j+1]".
std::string PairLabel(std::string_view name, int i, int j);

/// Smallest even integer >= x, and 0 for x <= 0.
int EvenCeil(int x);

struct Context {
  const sdp::Backend* backend = nullptr;  // nullptr selects ATTRAKT_SOLVER
  std::ostream* log = nullptr;
};

enum class Step1Mode {
  kGeneral,
  /// R = V_N, m0 = 0, p = m1 SOS: the classical level-set method.
  kLevelSet,
};

/// Solved multipliers of the invariance conditions at one level.
struct Step1Artifacts {
  double gamma = 0.0;
  PiecewiseMax r;
  Polynomial v_n;
  std::vector<Polynomial> p, m0, m1;
  std::map<std::string, Polynomial> s;
  std::map<std::string, sos::Gram> grams;
};

/// Invariance conditions for E(R_M, gamma), one set per piece:
///   a: -<grad R_i, f> - p_i (gamma - R_i) - sum_j s_ij (R_i - R_j) - eps |x|^2
///   b: V_N - m0_i (gamma - R_i) - sum_j s'_ij (R_i - R_j) - eps |x|^2
///   c: -<grad V_N, f> - m1_i (gamma - R_i) - sum_j s''_ij (R_i - R_j) - eps |x|^2
struct ConditionProgram {
  sos::SosProgram prog;
  std::optional<sos::DecisionPoly> v_n;
  std::vector<sos::DecisionPoly> p, m0, m1;
  std::map<std::string, sos::DecisionPoly> s;
  std::map<std::string, int> constraints;
  Step1Mode mode = Step1Mode::kGeneral;

  explicit ConditionProgram(int nvars) : prog(nvars) {}
};

ConditionProgram Step1Conditions(const PolySystem& sys, const PiecewiseMax& r, double gamma,
                                 const RunConfig& cfg, Step1Mode mode = Step1Mode::kGeneral);
ConditionProgram Step1Conditions(const PolySystem& sys, const Polynomial& r, double gamma,
                                 const RunConfig& cfg, Step1Mode mode = Step1Mode::kGeneral);

struct Probe {
  sdp::SolveStatus status = sdp::SolveStatus::kNumericalFailure;
  std::optional<Step1Artifacts> artifacts;  // set iff status is Optimal
};

/// Builds and solves the conditions at a single level.
Probe SolveStep1(const PolySystem& sys, const PiecewiseMax& r, double gamma, const RunConfig& cfg,
                 const Context& ctx = {}, Step1Mode mode = Step1Mode::kGeneral);

/// Largest certified gamma in [gamma_lo, gamma_hi] by bracketing and
/// bisection. `known` is a level already certified; the search then only
/// looks upward from it. Throws NotCertifiable or SolverFailure when
/// nothing is certified.
Step1Artifacts Step1MaximizeGamma(const PolySystem& sys, const PiecewiseMax& r, const RunConfig& cfg,
                                  const Context& ctx = {}, std::optional<Step1Artifacts> known = std::nullopt,
                                  Step1Mode mode = Step1Mode::kGeneral);

/// R - c - kappa (sum x_i^2)^k is SOS with deg c <= 2k - 1.
struct CompactnessSpec {
  double kappa = 1e-3;
  int k = 1;
};

/// A fixed set E(r, gamma) the updated estimate must contain.
struct Enclosure {
  Polynomial r;
  double gamma = 0.0;
};

struct Step2Result {
  bool fixed_point = true;
  Step1Artifacts artifacts;  // R_new, gamma_new, V_N with the fixed p, m0, m1
  ContainmentLink link;
  std::optional<ContainmentLink> enclose_link;  // set when `enclose` was given and met
};

/// Step 2 with p, m0, m1 held from `step1` and R a decision polynomial of
/// degree max(deg_r, deg R_hat). With `enclose`, every probe also requires
/// E(enclose) inside E(R, gamma).
Step2Result Step2UpdateR(const PolySystem& sys, const Step1Artifacts& step1, const RunConfig& cfg,
                         const CompactnessSpec& compactness, const Context& ctx = {},
                         const Enclosure* enclose = nullptr);

/// V_N, m0, m1, m2 with -<grad V_N, f> + V_N p_i - m2_i (gamma - R_i) - ... SOS.
struct RationalLf {
  Polynomial v_n;
  std::vector<Polynomial> m0, m1, m2;
  std::map<std::string, Polynomial> s;
  std::map<std::string, sos::Gram> grams;
};

/// nullopt when the solver does not return Optimal; that is an expected
/// outcome for some systems.
std::optional<RationalLf> RecoverRationalLf(const PolySystem& sys, const PiecewiseMax& r, double gamma,
                                            const std::vector<Polynomial>& p, const RunConfig& cfg,
                                            const Context& ctx = {});
/// Replaces V_N, m0, m1 and their grams and adds m2.
void AttachRational(EraCertificate& cert, const RationalLf& lf);

EraCertificate MakeCertificate(const PolySystem& sys, const Step1Artifacts& a, const RunConfig& cfg, int iteration);

/// x^T P x with A^T P + P A = -I for the linearization A. Throws
/// NotCertifiable when A is not Hurwitz.
Polynomial QuadraticInitializer(const PolySystem& sys);

/// Alternates Step 1 and Step 2 and returns every accepted iterate; the
/// last one is the final estimate. With `seed`, R_0 is the seed's V_N, the
/// first update must also enclose the seed's set, and the final estimate
/// gets a direct link from the seed's set when one is found.
std::vector<EraCertificate> Algorithm3(const PolySystem& sys, const RunConfig& cfg, const Context& ctx = {},
                                       const EraCertificate* seed = nullptr);

/// Largest certified gamma for fixed pieces, then a rational pass.
EraCertificate PiecewiseEra(const PolySystem& sys, const PiecewiseMax& pieces, const RunConfig& cfg,
                            const Context& ctx = {});

std::string WriteCertificate(const EraCertificate& cert);
/// Throws ParseError on malformed input.
EraCertificate ReadCertificate(std::string_view text);

}  // namespace attrakt::roa
