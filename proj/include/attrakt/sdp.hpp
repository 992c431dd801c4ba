#pragma once

#include <iosfwd>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace attrakt::sdp {

// Standard-form SDP over a product cone:
//
//   minimize    <C, X>
//   subject to  <A_i, X> = b_i,   i = 1..m
//               X = (X_1, ..., X_k),  X_j PSD, nonnegative or free.
//
// Dual:  maximize b^T y  s.t.  C - sum_i y_i A_i = S,  S in the dual cone
// (S_j = 0 on free blocks).

enum class BlockKind { kPsd, kNonneg, kFree };

struct Block {
  BlockKind kind;
  int size;
};

/// One entry of block-diagonal symmetric data. For PSD blocks row >= col and
/// the entry stands for both (row, col) and (col, row). For nonnegative and
/// free blocks row == col indexes the scalar variable.
struct Entry {
  int block;
  int row;
  int col;
  double value;
};

using SparseBlockSym = std::vector<Entry>;

struct SdpProblem {
  std::vector<Block> blocks;
  SparseBlockSym c;
  std::vector<SparseBlockSym> a;
  std::vector<double> b;

  int num_constraints() const { return static_cast<int>(a.size()); }
  /// Throws std::invalid_argument when entries do not conform to the blocks.
  void Validate() const;
  /// Text dump for cross-checking against external solvers:
  ///   m <num constraints>
  ///   blocks <kind><size> ...        (P = psd, L = nonneg, F = free)
  ///   b <b_1> ... <b_m>
  ///   <i> <block> <row> <col> <value>   (i = 0 is C; 1-based indices)
  void Dump(std::ostream& os) const;
};

/// Primal or dual point: PSD blocks are size x size, the others size x 1.
using BlockVector = std::vector<Eigen::MatrixXd>;

enum class SolveStatus { kOptimal, kPrimalInfeasible, kDualInfeasible, kMaxIterations, kNumericalFailure };

std::string_view ToString(SolveStatus s);

struct SolverOptions {
  double tol_feas = 1e-8;
  double tol_gap = 1e-8;
  int max_iters = 100;
  double step_fraction = 0.98;
  bool verbose = false;
};

struct SdpSolution {
  SolveStatus status = SolveStatus::kNumericalFailure;
  BlockVector x;
  Eigen::VectorXd y;
  BlockVector s;
  double primal_objective = 0.0;
  double dual_objective = 0.0;
  double primal_residual = 0.0;  // ||A(X) - b|| / (1 + ||b||)
  double dual_residual = 0.0;    // ||C - A^T y - S|| / (1 + ||C||)
  double gap = 0.0;              // |pobj - dobj| / (1 + |pobj| + |dobj|)
  int iterations = 0;
  /// PrimalInfeasible: y with b^T y = 1 and sum_i y_i A_i negative
  /// semidefinite up to tolerance (zero on free blocks).
  Eigen::VectorXd ray;
};

/// Built-in homogeneous self-dual interior-point method with
/// Nesterov-Todd scaling and Mehrotra predictor-corrector steps.
SdpSolution Solve(const SdpProblem& problem, const SolverOptions& options = {});

struct ResidualReport {
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  double gap = 0.0;
  std::vector<double> min_eigenvalue;  // per block; free blocks report 0
  double worst_min_eigenvalue = 0.0;   // over the PSD and nonnegative blocks
};

/// Recomputes residuals and per-block minimum eigenvalues of X with the
/// Jacobi eigensolver, independently of the solver internals.
ResidualReport VerifySolution(const SdpProblem& problem, const SdpSolution& solution);

/// Checks an infeasibility ray: returns max(0, lambda_max(sum y_i A_i)) on
/// PSD blocks, positive parts on nonnegative blocks and |.| on free blocks,
/// after normalizing b^T y = 1. Returns +inf when b^T y <= 0.
double RayViolation(const SdpProblem& problem, const Eigen::VectorXd& y);

/// Solver backend contract; the built-in solver is the reference.
class Backend {
 public:
  virtual ~Backend() = default;
  virtual std::string name() const = 0;
  virtual SdpSolution Solve(const SdpProblem& problem, const SolverOptions& options) const = 0;
};

/// "builtin" is the only bundled backend. Throws std::invalid_argument for
/// unknown names.
std::unique_ptr<Backend> MakeBackend(std::string_view name);
/// Backend named by $ATTRAKT_SOLVER, defaulting to "builtin".
std::unique_ptr<Backend> BackendFromEnvironment();

}  // namespace attrakt::sdp
