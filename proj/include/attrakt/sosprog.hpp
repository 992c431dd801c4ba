#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "attrakt/polynomial.hpp"
#include "attrakt/sdp.hpp"

namespace attrakt::sos {

/// A product of two expressions that both depend on decision variables.
class BilinearError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// The known part of an SOS expression reaches a degree no Gram basis of
/// the admissible half degree can produce.
class DegreeOverflow : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// All monomials in n variables with deg_min <= degree <= deg_max, in
/// graded-lex order.
std::vector<Monomial> MonomialBasis(int nvars, int deg_min, int deg_max);

enum class DecisionKind { kFree, kSos };

/// Handle to a decision polynomial owned by an SosProgram.
struct DecisionPoly {
  int id = -1;
};

/// constant + sum over decisions k and atoms j of coeff[k][j] * theta_kj,
/// where theta_kj are the scalar unknowns of decision k. Free decisions have
/// one atom per basis monomial; SOS decisions one per Gram entry (a >= b).
class Affine {
 public:
  explicit Affine(int nvars = 0) : constant_(nvars) {}
  Affine(const Polynomial& constant) : constant_(constant) {}  // NOLINT

  int nvars() const { return constant_.nvars(); }
  const Polynomial& constant() const { return constant_; }
  const std::map<int, std::vector<Polynomial>>& terms() const { return terms_; }
  bool is_constant() const { return terms_.empty(); }

  Affine& operator+=(const Affine& other);
  Affine& operator-=(const Affine& other);
  Affine& operator*=(double s);
  friend Affine operator+(Affine a, const Affine& b) { return a += b; }
  friend Affine operator-(Affine a, const Affine& b) { return a -= b; }
  friend Affine operator*(Affine a, double s) { return a *= s; }
  friend Affine operator*(double s, Affine a) { return a *= s; }
  friend Affine operator*(const Polynomial& p, const Affine& a);
  friend Affine operator*(const Affine& a, const Polynomial& p) { return p * a; }
  /// Throws BilinearError unless one side is constant.
  friend Affine operator*(const Affine& a, const Affine& b);
  Affine operator-() const { return *this * -1.0; }

  Affine Derivative(int index) const;

 private:
  friend class SosProgram;
  Polynomial constant_;
  std::map<int, std::vector<Polynomial>> terms_;
};

/// <grad e, f> for an expression e affine in the decisions.
Affine LieDerivative(const Affine& e, const std::vector<Polynomial>& f);

struct Gram {
  std::vector<Monomial> basis;
  Eigen::MatrixXd q;

  /// Z(x)^T Q Z(x) expanded.
  Polynomial Expand(int nvars) const;
};

struct ObjectiveTerm {
  DecisionPoly decision;
  Monomial monomial;  // coefficient of this monomial in a free decision
  double weight;
};

/// Where each decision and Gram landed in the compiled SDP.
struct IndexMap {
  struct DecisionSlot {
    bool allocated = false;
    int block = -1;   // SDP block (free block for free decisions)
    int offset = 0;   // first index inside the free block
  };
  std::vector<DecisionSlot> decisions;
  std::vector<int> constraint_blocks;            // one per SOS constraint
  std::vector<std::vector<Monomial>> gram_bases;  // one per SOS constraint
  std::vector<std::pair<int, Monomial>> rows;     // (constraint, monomial) per SDP row
};

struct SosSolution {
  sdp::SolveStatus status = sdp::SolveStatus::kNumericalFailure;
  std::vector<Polynomial> values;      // by decision id
  std::vector<Gram> decision_grams;    // by decision id; empty basis for free ones
  std::vector<Gram> constraint_grams;  // by SOS constraint index
  std::vector<Eigen::VectorXd> unknowns;  // by decision id, one value per atom
  sdp::SdpSolution raw;

  bool optimal() const { return status == sdp::SolveStatus::kOptimal; }
  const Polynomial& value(DecisionPoly d) const;
};

class SosProgram {
 public:
  explicit SosProgram(int nvars) : nvars_(nvars) {}

  int nvars() const { return nvars_; }

  /// Polynomial sum_b theta_b * basis[b] with unconstrained coefficients.
  DecisionPoly NewFree(std::string name, std::vector<Monomial> basis);
  /// Polynomial Z^T Q Z with Q PSD over the given Gram basis.
  DecisionPoly NewSos(std::string name, std::vector<Monomial> gram_basis);

  Affine operator()(DecisionPoly d) const;

  /// expression is SOS. Returns the constraint index.
  int AddSos(std::string name, const Affine& expression);
  /// expression is identically zero.
  void AddZero(std::string name, const Affine& expression);
  /// Minimizes sum of weight * coefficient. Only free decisions qualify.
  void Minimize(std::vector<ObjectiveTerm> objective);

  int num_decisions() const { return static_cast<int>(decisions_.size()); }
  int num_sos_constraints() const { return static_cast<int>(sos_.size()); }
  const std::string& decision_name(DecisionPoly d) const { return decisions_.at(d.id).name; }
  const std::string& constraint_name(int index) const { return sos_.at(index).name; }
  const Affine& constraint_expression(int index) const { return sos_.at(index).expression; }

  /// Throws DegreeOverflow.
  sdp::SdpProblem Compile(IndexMap* index = nullptr) const;
  SosSolution Solve(const sdp::Backend& backend, const sdp::SolverOptions& options = {}) const;
  SosSolution Solve(const sdp::SolverOptions& options = {}) const;

  /// Decision values substituted into an expression.
  Polynomial Evaluate(const Affine& e, const SosSolution& sol) const;

 private:
  struct Decision {
    std::string name;
    DecisionKind kind;
    std::vector<Monomial> basis;
    std::vector<Polynomial> atoms;  // polynomial multiplying each scalar unknown
    std::vector<std::pair<int, int>> entries;  // Gram (row, col) per atom for SOS decisions
  };
  struct Constraint {
    std::string name;
    Affine expression;
  };

  std::vector<Monomial> GramBasis(const Affine& e, const std::string& name) const;
  void CheckArity(const Affine& e) const;

  int nvars_;
  std::vector<Decision> decisions_;
  std::vector<Constraint> sos_;
  std::vector<Constraint> zero_;
  std::vector<ObjectiveTerm> objective_;
};

}  // namespace attrakt::sos
