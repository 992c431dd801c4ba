#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>

#include "attrakt/linalg.hpp"
#include "attrakt/polynomial.hpp"
#include "attrakt/sdp.hpp"

namespace attrakt::sdp {

std::string_view ToString(SolveStatus s) {
  switch (s) {
    case SolveStatus::kOptimal: return "Optimal";
    case SolveStatus::kPrimalInfeasible: return "PrimalInfeasible";
    case SolveStatus::kDualInfeasible: return "DualInfeasible";
    case SolveStatus::kMaxIterations: return "MaxIterations";
    case SolveStatus::kNumericalFailure: return "NumericalFailure";
  }
  return "Unknown";
}

void SdpProblem::Validate() const {
  if (b.size() != a.size()) throw std::invalid_argument("SDP: b has " + std::to_string(b.size()) +
                                                        " entries for " + std::to_string(a.size()) + " constraints");
  for (const Block& blk : blocks) {
    if (blk.size < 1) throw std::invalid_argument("SDP: block size must be positive");
  }
  auto check = [&](const SparseBlockSym& m, const std::string& what) {
    for (const Entry& e : m) {
      if (e.block < 0 || e.block >= static_cast<int>(blocks.size()))
        throw std::invalid_argument("SDP: " + what + " references block " + std::to_string(e.block));
      const Block& blk = blocks[e.block];
      const bool ok = blk.kind == BlockKind::kPsd ? (e.col >= 0 && e.col <= e.row && e.row < blk.size)
                                                  : (e.row == e.col && e.row >= 0 && e.row < blk.size);
      if (!ok) throw std::invalid_argument("SDP: " + what + " entry out of range");
      if (!std::isfinite(e.value)) throw std::invalid_argument("SDP: " + what + " has a non-finite value");
    }
  };
  check(c, "C");
  for (std::size_t i = 0; i < a.size(); ++i) {
    check(a[i], "A_" + std::to_string(i + 1));
    if (!std::isfinite(b[i])) throw std::invalid_argument("SDP: non-finite b");
  }
}

void SdpProblem::Dump(std::ostream& os) const {
  os << "m " << a.size() << "\nblocks";
  for (const Block& blk : blocks) {
    const char k = blk.kind == BlockKind::kPsd ? 'P' : blk.kind == BlockKind::kNonneg ? 'L' : 'F';
    os << ' ' << k << blk.size;
  }
  os << "\nb";
  for (double v : b) os << ' ' << FormatDouble(v);
  os << '\n';
  auto dump = [&](std::size_t i, const SparseBlockSym& m) {
    for (const Entry& e : m) {
      os << i << ' ' << e.block + 1 << ' ' << e.row + 1 << ' ' << e.col + 1 << ' ' << FormatDouble(e.value) << '\n';
    }
  };
  dump(0, c);
  for (std::size_t i = 0; i < a.size(); ++i) dump(i + 1, a[i]);
}

namespace {

// Adds scale * (entries of m) into dense per-block storage shaped like `out`.
void Accumulate(const std::vector<Block>& blocks, const SparseBlockSym& m, double scale, BlockVector& out) {
  for (const Entry& e : m) {
    if (blocks[e.block].kind == BlockKind::kPsd) {
      out[e.block](e.row, e.col) += scale * e.value;
      if (e.row != e.col) out[e.block](e.col, e.row) += scale * e.value;
    } else {
      out[e.block](e.row, 0) += scale * e.value;
    }
  }
}

BlockVector ZeroBlocks(const std::vector<Block>& blocks) {
  BlockVector out;
  for (const Block& blk : blocks) {
    out.push_back(blk.kind == BlockKind::kPsd ? Eigen::MatrixXd::Zero(blk.size, blk.size)
                                              : Eigen::MatrixXd::Zero(blk.size, 1));
  }
  return out;
}

double InnerSparse(const std::vector<Block>& blocks, const SparseBlockSym& m, const BlockVector& x) {
  double s = 0.0;
  for (const Entry& e : m) {
    if (blocks[e.block].kind == BlockKind::kPsd) {
      s += (e.row == e.col ? 1.0 : 2.0) * e.value * x[e.block](e.row, e.col);
    } else {
      s += e.value * x[e.block](e.row, 0);
    }
  }
  return s;
}

double MinEig(const Eigen::MatrixXd& m) {
  linalg::SymMatrix s(static_cast<int>(m.rows()));
  for (int r = 0; r < m.rows(); ++r)
    for (int c = 0; c <= r; ++c) s(r, c) = 0.5 * (m(r, c) + m(c, r));
  return linalg::MinEigenvalue(s);
}

}  // namespace

ResidualReport VerifySolution(const SdpProblem& p, const SdpSolution& sol) {
  ResidualReport r;
  const int m = p.num_constraints();
  double pr = 0.0, bn = 0.0;
  for (int i = 0; i < m; ++i) {
    const double v = InnerSparse(p.blocks, p.a[i], sol.x) - p.b[i];
    pr += v * v;
    bn += p.b[i] * p.b[i];
  }
  r.primal_residual = std::sqrt(pr) / (1.0 + std::sqrt(bn));

  BlockVector dual = ZeroBlocks(p.blocks);
  Accumulate(p.blocks, p.c, 1.0, dual);
  double cn = 0.0;
  for (const auto& blk : dual) cn += blk.squaredNorm();
  for (int i = 0; i < m; ++i) Accumulate(p.blocks, p.a[i], -sol.y(i), dual);
  double dr = 0.0;
  for (std::size_t b = 0; b < p.blocks.size(); ++b) {
    if (p.blocks[b].kind != BlockKind::kFree) dual[b] -= sol.s[b];
    dr += dual[b].squaredNorm();
  }
  r.dual_residual = std::sqrt(dr) / (1.0 + std::sqrt(cn));

  const double pobj = InnerSparse(p.blocks, p.c, sol.x);
  double dobj = 0.0;
  for (int i = 0; i < m; ++i) dobj += p.b[i] * sol.y(i);
  r.gap = std::abs(pobj - dobj) / (1.0 + std::abs(pobj) + std::abs(dobj));

  r.worst_min_eigenvalue = std::numeric_limits<double>::infinity();
  for (std::size_t b = 0; b < p.blocks.size(); ++b) {
    double e = 0.0;
    if (p.blocks[b].kind == BlockKind::kPsd) {
      e = MinEig(sol.x[b]);
    } else if (p.blocks[b].kind == BlockKind::kNonneg) {
      e = sol.x[b].minCoeff();
    }
    r.min_eigenvalue.push_back(e);
    if (p.blocks[b].kind != BlockKind::kFree) r.worst_min_eigenvalue = std::min(r.worst_min_eigenvalue, e);
  }
  if (!std::isfinite(r.worst_min_eigenvalue)) r.worst_min_eigenvalue = 0.0;
  return r;
}

double RayViolation(const SdpProblem& p, const Eigen::VectorXd& y) {
  double by = 0.0;
  for (int i = 0; i < p.num_constraints(); ++i) by += p.b[i] * y(i);
  if (!(by > 0.0)) return std::numeric_limits<double>::infinity();
  BlockVector sum = ZeroBlocks(p.blocks);
  for (int i = 0; i < p.num_constraints(); ++i) Accumulate(p.blocks, p.a[i], y(i) / by, sum);
  double worst = 0.0;
  for (std::size_t b = 0; b < p.blocks.size(); ++b) {
    switch (p.blocks[b].kind) {
      case BlockKind::kPsd: worst = std::max(worst, -MinEig(-sum[b])); break;
      case BlockKind::kNonneg: worst = std::max(worst, sum[b].maxCoeff()); break;
      case BlockKind::kFree: worst = std::max(worst, sum[b].cwiseAbs().maxCoeff()); break;
    }
  }
  return worst;
}

namespace {

class BuiltinBackend final : public Backend {
 public:
  std::string name() const override { return "builtin"; }
  SdpSolution Solve(const SdpProblem& problem, const SolverOptions& options) const override {
    return sdp::Solve(problem, options);
  }
};

}  // namespace

std::unique_ptr<Backend> MakeBackend(std::string_view name) {
  if (name == "builtin") return std::make_unique<BuiltinBackend>();
  throw std::invalid_argument("unknown SDP backend '" + std::string(name) + "'");
}

std::unique_ptr<Backend> BackendFromEnvironment() {
  const char* env = std::getenv("ATTRAKT_SOLVER");
  return MakeBackend(env && *env ? env : "builtin");
}

}  // namespace attrakt::sdp
