#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <optional>
#include <tuple>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/SVD>

#include "attrakt/sdp.hpp"
#include "attrakt/sdp_kernels.hpp"

namespace attrakt::sdp {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Problem data after dropping empty rows and equilibrating the rest.
struct Internal {
  int m = 0;
  std::vector<int> kept;  // internal row -> original row
  VectorXd d;             // A_internal = A_original / d
  std::vector<int> psd_block;                // psd slot -> original block
  std::vector<int> lp_block, lp_index;       // lp slot -> (block, index)
  std::vector<int> free_block, free_index;   // free slot -> (block, index)
  kernels::PsdStructure psd;
  std::vector<MatrixXd> c_psd;
  MatrixXd a_lp;
  VectorXd c_lp;
  MatrixXd a_free;
  VectorXd c_free;
  VectorXd b;
  double b_norm = 0.0;  // original scale
  double c_norm = 0.0;
  int nu = 0;
};

struct Iterate {
  std::vector<MatrixXd> x, s;
  VectorXd xl, sl, xf, y;
  double tau = 1.0, kappa = 1.0;
};

struct Direction {
  std::vector<MatrixXd> dx, ds;
  VectorXd dxl, dsl, dxf, dy;
  double dtau = 0.0, dkappa = 0.0;
};

struct Scaling {
  std::vector<MatrixXd> r, rinv, w;
  std::vector<VectorXd> lambda;
  VectorXd wl;  // sqrt(x / s); the lp scaling operator multiplies by wl^2
  VectorXd lambda_l;
};

using EntryKey = std::tuple<int, int, int>;  // block, row, col

std::map<EntryKey, double> Merge(const SparseBlockSym& m) {
  std::map<EntryKey, double> out;
  for (const Entry& e : m) out[{e.block, e.row, e.col}] += e.value;
  return out;
}

double Inner(const std::vector<kernels::LocalEntry>& a, const MatrixXd& x) {
  double s = 0.0;
  for (const auto& e : a) s += e.row == e.col ? e.value * x(e.row, e.col) : 2.0 * e.value * x(e.row, e.col);
  return s;
}

double BlockInner(const std::vector<MatrixXd>& a, const std::vector<MatrixXd>& b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k].cwiseProduct(b[k]).sum();
  return s;
}

struct Preprocessed {
  Internal in;
  std::optional<SdpSolution> early;
};

Preprocessed Preprocess(const SdpProblem& p) {
  Preprocessed out;
  Internal& in = out.in;
  const int nb = static_cast<int>(p.blocks.size());
  std::vector<int> psd_slot(nb, -1), lp_offset(nb, -1), free_offset(nb, -1);
  int n_lp = 0, n_free = 0;
  for (int b = 0; b < nb; ++b) {
    switch (p.blocks[b].kind) {
      case BlockKind::kPsd:
        psd_slot[b] = static_cast<int>(in.psd_block.size());
        in.psd_block.push_back(b);
        in.nu += p.blocks[b].size;
        break;
      case BlockKind::kNonneg:
        lp_offset[b] = n_lp;
        for (int i = 0; i < p.blocks[b].size; ++i) {
          in.lp_block.push_back(b);
          in.lp_index.push_back(i);
        }
        n_lp += p.blocks[b].size;
        in.nu += p.blocks[b].size;
        break;
      case BlockKind::kFree:
        free_offset[b] = n_free;
        for (int i = 0; i < p.blocks[b].size; ++i) {
          in.free_block.push_back(b);
          in.free_index.push_back(i);
        }
        n_free += p.blocks[b].size;
        break;
    }
  }

  const int m_orig = p.num_constraints();
  std::vector<std::map<EntryKey, double>> rows(m_orig);
  std::vector<double> norms(m_orig, 0.0);
  for (int i = 0; i < m_orig; ++i) {
    rows[i] = Merge(p.a[i]);
    double s = 0.0;
    for (const auto& [key, v] : rows[i]) {
      const auto& [blk, r, c] = key;
      s += (r == c ? 1.0 : 2.0) * v * v;
    }
    norms[i] = std::sqrt(s);
  }
  for (double bi : p.b) in.b_norm += bi * bi;
  in.b_norm = std::sqrt(in.b_norm);

  for (int i = 0; i < m_orig; ++i) {
    if (norms[i] > 0.0) {
      in.kept.push_back(i);
      continue;
    }
    if (p.b[i] != 0.0) {
      SdpSolution sol;
      sol.status = SolveStatus::kPrimalInfeasible;
      sol.ray = VectorXd::Zero(m_orig);
      sol.ray(i) = 1.0 / p.b[i];
      sol.y = VectorXd::Zero(m_orig);
      out.early = sol;
      return out;
    }
  }
  in.m = static_cast<int>(in.kept.size());
  in.d.resize(in.m);
  in.b.resize(in.m);
  for (int k = 0; k < in.m; ++k) {
    in.d(k) = norms[in.kept[k]];
    in.b(k) = p.b[in.kept[k]] / in.d(k);
  }

  in.psd.num_constraints = in.m;
  in.psd.blocks.resize(in.psd_block.size());
  for (std::size_t s = 0; s < in.psd_block.size(); ++s) in.psd.blocks[s].size = p.blocks[in.psd_block[s]].size;
  in.a_lp = MatrixXd::Zero(in.m, n_lp);
  in.a_free = MatrixXd::Zero(in.m, n_free);
  for (int k = 0; k < in.m; ++k) {
    std::map<int, kernels::ConstraintBlock> per_block;
    for (const auto& [key, v] : rows[in.kept[k]]) {
      const auto& [blk, r, c] = key;
      const double val = v / in.d(k);
      if (psd_slot[blk] >= 0) {
        auto& cb = per_block[psd_slot[blk]];
        cb.constraint = k;
        cb.entries.push_back({r, c, val});
      } else if (lp_offset[blk] >= 0) {
        in.a_lp(k, lp_offset[blk] + r) += val;
      } else {
        in.a_free(k, free_offset[blk] + r) += val;
      }
    }
    for (auto& [slot, cb] : per_block) in.psd.blocks[slot].cons.push_back(std::move(cb));
  }
  in.psd.Index();

  in.c_psd.resize(in.psd_block.size());
  for (std::size_t s = 0; s < in.psd_block.size(); ++s) {
    const int n = p.blocks[in.psd_block[s]].size;
    in.c_psd[s] = MatrixXd::Zero(n, n);
  }
  in.c_lp = VectorXd::Zero(n_lp);
  in.c_free = VectorXd::Zero(n_free);
  double cn = 0.0;
  for (const auto& [key, v] : Merge(p.c)) {
    const auto& [blk, r, c] = key;
    if (psd_slot[blk] >= 0) {
      in.c_psd[psd_slot[blk]](r, c) += v;
      if (r != c) in.c_psd[psd_slot[blk]](c, r) += v;
      cn += (r == c ? 1.0 : 2.0) * v * v;
    } else if (lp_offset[blk] >= 0) {
      in.c_lp(lp_offset[blk] + r) += v;
      cn += v * v;
    } else {
      in.c_free(free_offset[blk] + r) += v;
      cn += v * v;
    }
  }
  in.c_norm = std::sqrt(cn);

  // Free variables that no constraint touches: fixed at zero unless the
  // objective pushes them, in which case the problem is unbounded (or
  // infeasible, which the caller cannot distinguish without a solve).
  for (int j = 0; j < n_free; ++j) {
    if (in.a_free.col(j).squaredNorm() == 0.0 && in.c_free(j) != 0.0) {
      SdpSolution sol;
      sol.status = SolveStatus::kDualInfeasible;
      out.early = sol;
      return out;
    }
  }
  return out;
}

VectorXd ApplyA(const Internal& in, const std::vector<MatrixXd>& x, const VectorXd& xl, const VectorXd& xf) {
  VectorXd out = in.a_lp * xl + in.a_free * xf;
  for (std::size_t b = 0; b < in.psd.blocks.size(); ++b) {
    for (const auto& cb : in.psd.blocks[b].cons) out(cb.constraint) += Inner(cb.entries, x[b]);
  }
  return out;
}

std::vector<MatrixXd> ApplyATPsd(const Internal& in, const VectorXd& y) {
  std::vector<MatrixXd> out(in.psd.blocks.size());
  for (std::size_t b = 0; b < in.psd.blocks.size(); ++b) {
    const int n = in.psd.blocks[b].size;
    out[b] = MatrixXd::Zero(n, n);
    for (const auto& cb : in.psd.blocks[b].cons) {
      const double yi = y(cb.constraint);
      if (yi == 0.0) continue;
      for (const auto& e : cb.entries) {
        out[b](e.row, e.col) += yi * e.value;
        if (e.row != e.col) out[b](e.col, e.row) += yi * e.value;
      }
    }
  }
  return out;
}

std::optional<Scaling> ComputeScaling(const Iterate& it) {
  Scaling sc;
  const std::size_t nb = it.x.size();
  sc.r.resize(nb);
  sc.rinv.resize(nb);
  sc.w.resize(nb);
  sc.lambda.resize(nb);
  for (std::size_t b = 0; b < nb; ++b) {
    Eigen::LLT<MatrixXd> lx(it.x[b]), ls(it.s[b]);
    if (lx.info() != Eigen::Success || ls.info() != Eigen::Success) return std::nullopt;
    const MatrixXd lxm = lx.matrixL();
    const MatrixXd lsm = ls.matrixL();
    Eigen::JacobiSVD<MatrixXd> svd(lsm.transpose() * lxm, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const VectorXd lam = svd.singularValues();
    if (lam.minCoeff() <= 0.0 || !lam.allFinite()) return std::nullopt;
    const VectorXd inv_sqrt = lam.cwiseSqrt().cwiseInverse();
    sc.r[b] = lxm * svd.matrixV() * inv_sqrt.asDiagonal();
    sc.rinv[b] = inv_sqrt.asDiagonal() * svd.matrixU().transpose() * lsm.transpose();
    sc.w[b] = sc.r[b] * sc.r[b].transpose();
    sc.w[b] = 0.5 * (sc.w[b] + sc.w[b].transpose());
    sc.lambda[b] = lam;
  }
  if ((it.xl.array() <= 0.0).any() || (it.sl.array() <= 0.0).any()) return std::nullopt;
  sc.wl = (it.xl.array() / it.sl.array()).sqrt();
  sc.lambda_l = (it.xl.array() * it.sl.array()).sqrt();
  return sc;
}

// Solves [M A_f; A_f^T 0] [u; v] = [r1; r2].
class KktSolver {
 public:
  bool Factor(const MatrixXd& m, const MatrixXd& af) {
    m_ = &m;
    af_ = &af;
    use_schur_ = false;
    llt_.compute(m);
    if (llt_.info() == Eigen::Success) {
      if (af.cols() == 0) {
        use_schur_ = true;
        return true;
      }
      minv_af_ = llt_.solve(af);
      fllt_.compute(af.transpose() * minv_af_);
      if (fllt_.info() == Eigen::Success && minv_af_.allFinite()) {
        use_schur_ = true;
        return true;
      }
    }
    // Regularized quasi-definite fallback; refinement against the exact
    // system recovers most of the lost accuracy.
    const int n = static_cast<int>(m.rows()), nf = static_cast<int>(af.cols());
    MatrixXd k(n + nf, n + nf);
    k.topLeftCorner(n, n) = m;
    k.topRightCorner(n, nf) = af;
    k.bottomLeftCorner(nf, n) = af.transpose();
    k.bottomRightCorner(nf, nf).setZero();
    const double scale = std::max(1.0, m.diagonal().cwiseAbs().maxCoeff());
    const double delta = 1e-13 * scale;
    k.topLeftCorner(n, n).diagonal().array() += delta;
    k.bottomRightCorner(nf, nf).diagonal().array() -= delta;
    lu_.compute(k);
    return std::isfinite(lu_.rcond()) && lu_.rcond() > 1e-300;
  }

  VectorXd Solve(const VectorXd& rhs) const {
    VectorXd sol = SolveOnce(rhs);
    for (int pass = 0; pass < (use_schur_ ? 1 : 3); ++pass) {
      const VectorXd res = rhs - Apply(sol);
      sol += SolveOnce(res);
    }
    return sol;
  }

 private:
  VectorXd Apply(const VectorXd& v) const {
    const int n = static_cast<int>(m_->rows()), nf = static_cast<int>(af_->cols());
    VectorXd out(n + nf);
    out.head(n) = (*m_) * v.head(n) + (*af_) * v.tail(nf);
    out.tail(nf) = af_->transpose() * v.head(n);
    return out;
  }

  VectorXd SolveOnce(const VectorXd& rhs) const {
    const int n = static_cast<int>(m_->rows()), nf = static_cast<int>(af_->cols());
    if (!use_schur_) return lu_.solve(rhs);
    VectorXd out(n + nf);
    const VectorXd minv_r1 = llt_.solve(rhs.head(n));
    if (nf == 0) return minv_r1;
    const VectorXd v = fllt_.solve(af_->transpose() * minv_r1 - rhs.tail(nf));
    out.head(n) = minv_r1 - minv_af_ * v;
    out.tail(nf) = v;
    return out;
  }

  const MatrixXd* m_ = nullptr;
  const MatrixXd* af_ = nullptr;
  bool use_schur_ = false;
  Eigen::LLT<MatrixXd> llt_;
  Eigen::LLT<MatrixXd> fllt_;
  MatrixXd minv_af_;
  Eigen::PartialPivLU<MatrixXd> lu_;
};

struct Residuals {
  VectorXd rp;
  std::vector<MatrixXd> rd;
  VectorXd rdl, rf;
  double rg = 0.0;
  double pobj = 0.0, dobj = 0.0;
  double mu = 0.0;
};

Residuals ComputeResiduals(const Internal& in, const Iterate& it) {
  Residuals r;
  r.rp = ApplyA(in, it.x, it.xl, it.xf) - in.b * it.tau;
  r.rd = ApplyATPsd(in, it.y);
  for (std::size_t b = 0; b < r.rd.size(); ++b) r.rd[b] += it.s[b] - in.c_psd[b] * it.tau;
  r.rdl = in.a_lp.transpose() * it.y + it.sl - in.c_lp * it.tau;
  r.rf = in.a_free.transpose() * it.y - in.c_free * it.tau;
  double cx = in.c_lp.dot(it.xl) + in.c_free.dot(it.xf);
  for (std::size_t b = 0; b < it.x.size(); ++b) cx += in.c_psd[b].cwiseProduct(it.x[b]).sum();
  r.pobj = cx;
  r.dobj = in.b.dot(it.y);
  r.rg = r.pobj - r.dobj + it.kappa;
  r.mu = (BlockInner(it.x, it.s) + it.xl.dot(it.sl) + it.tau * it.kappa) / (in.nu + 1);
  return r;
}

double DualResidualNorm(const Residuals& r) {
  double s = r.rdl.squaredNorm() + r.rf.squaredNorm();
  for (const auto& m : r.rd) s += m.squaredNorm();
  return std::sqrt(s);
}

// Largest alpha with Lambda + alpha * d PSD, given d in the scaled frame.
double MaxStepScaled(const VectorXd& lambda, const MatrixXd& d) {
  const VectorXd is = lambda.cwiseSqrt().cwiseInverse();
  const MatrixXd t = is.asDiagonal() * d * is.asDiagonal();
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(0.5 * (t + t.transpose()), Eigen::EigenvaluesOnly);
  const double lo = es.eigenvalues().minCoeff();
  return lo < 0.0 ? -1.0 / lo : std::numeric_limits<double>::infinity();
}

double MaxStepVector(const VectorXd& x, const VectorXd& dx) {
  double a = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (dx(i) < 0.0) a = std::min(a, -x(i) / dx(i));
  }
  return a;
}

struct ScaledDir {
  std::vector<MatrixXd> dx, ds;
};

double MaxStep(const Iterate& it, const Scaling& sc, const Direction& d, ScaledDir* scaled) {
  double a = std::numeric_limits<double>::infinity();
  ScaledDir local;
  ScaledDir& sd = scaled ? *scaled : local;
  sd.dx.resize(it.x.size());
  sd.ds.resize(it.x.size());
  for (std::size_t b = 0; b < it.x.size(); ++b) {
    sd.dx[b] = sc.rinv[b] * d.dx[b] * sc.rinv[b].transpose();
    sd.ds[b] = sc.r[b].transpose() * d.ds[b] * sc.r[b];
    a = std::min(a, MaxStepScaled(sc.lambda[b], sd.dx[b]));
    a = std::min(a, MaxStepScaled(sc.lambda[b], sd.ds[b]));
  }
  a = std::min(a, MaxStepVector(it.xl, d.dxl));
  a = std::min(a, MaxStepVector(it.sl, d.dsl));
  if (d.dtau < 0.0) a = std::min(a, -it.tau / d.dtau);
  if (d.dkappa < 0.0) a = std::min(a, -it.kappa / d.dkappa);
  return a;
}

// Shared data for the two solves of one iteration. The cost is shifted to
// C' = C - A^T(y / tau) = (S - R_d) / tau, which leaves the Newton system
// unchanged up to dy = dy' + dtau * y / tau but keeps W C' W = (X - W R_d W) / tau
// small near the central path, so the tau equation does not cancel.
struct Newton {
  const Internal* in;
  const Iterate* it;
  const Scaling* sc;
  const Residuals* res;
  const KktSolver* kkt;
  std::vector<MatrixXd> c;  // C'
  VectorXd cl, cf;
  std::vector<MatrixXd> wcw;
  VectorXd wcw_l;
  VectorXd wl2;
  double rg = 0.0;          // R_g - ybar^T R_p
  VectorXd g;               // A(W C' W)
  double h = 0.0;           // <C', W C' W>
  VectorXd q;               // K q = [g + b; c_f']
};

Newton PrepareNewton(const Internal& in, const Iterate& it, const Scaling& sc, const Residuals& res,
                     const KktSolver& kkt) {
  Newton nw{&in, &it, &sc, &res, &kkt, {}, {}, {}, {}, {}, {}, 0.0, {}, 0.0, {}};
  const double inv_tau = 1.0 / it.tau;
  const int m = in.m, nf = static_cast<int>(in.c_free.size());
  std::vector<MatrixXd>& wcw = nw.wcw;
  wcw.resize(it.x.size());
  nw.c.resize(it.x.size());
  for (std::size_t b = 0; b < it.x.size(); ++b) {
    nw.c[b] = (it.s[b] - res.rd[b]) * inv_tau;
    wcw[b] = (it.x[b] - sc.w[b] * res.rd[b] * sc.w[b]) * inv_tau;
    nw.h += nw.c[b].cwiseProduct(wcw[b]).sum();
  }
  nw.wl2 = sc.wl.array().square();
  nw.cl = (it.sl - res.rdl) * inv_tau;
  nw.wcw_l = (it.xl - nw.wl2.cwiseProduct(res.rdl)) * inv_tau;
  const VectorXd& wcw_l = nw.wcw_l;
  nw.h += nw.cl.dot(wcw_l);
  nw.cf = -res.rf * inv_tau;
  nw.rg = res.rg - res.rp.dot(it.y) * inv_tau;
  nw.g = ApplyA(in, wcw, wcw_l, VectorXd::Zero(nf));
  VectorXd qrhs(m + nf);
  qrhs.head(m) = nw.g + in.b;
  qrhs.tail(nf) = nw.cf;
  nw.q = kkt.Solve(qrhs);
  return nw;
}

Direction SolveDirection(const Newton& nw, double eta, const std::vector<MatrixXd>& rc, const VectorXd& rcl,
                         double rhs_k) {
  const Internal& in = *nw.in;
  const Iterate& it = *nw.it;
  const Scaling& sc = *nw.sc;
  const Residuals& res = *nw.res;
  const int m = in.m, nf = static_cast<int>(in.c_free.size());

  std::vector<MatrixXd> dmat(rc.size());
  for (std::size_t b = 0; b < rc.size(); ++b) dmat[b] = rc[b] + eta * sc.w[b] * res.rd[b] * sc.w[b];
  const VectorXd dl = rcl + eta * nw.wl2.cwiseProduct(res.rdl);

  VectorXd rhs(m + nf);
  rhs.head(m) = -eta * res.rp - ApplyA(in, dmat, dl, VectorXd::Zero(nf));
  rhs.tail(nf) = -eta * res.rf;
  double cd = nw.cl.dot(dl);
  for (std::size_t b = 0; b < dmat.size(); ++b) cd += nw.c[b].cwiseProduct(dmat[b]).sum();
  const double r3 = -eta * nw.rg - cd - rhs_k / it.tau;

  const VectorXd p = nw.kkt->Solve(rhs);
  const VectorXd gb = nw.g - in.b;
  const double num = r3 - gb.dot(p.head(m)) - nw.cf.dot(p.tail(nf));
  const double den = gb.dot(nw.q.head(m)) + nw.cf.dot(nw.q.tail(nf)) - nw.h - it.kappa / it.tau;

  Direction d;
  d.dtau = num / den;
  const VectorXd sol = p + d.dtau * nw.q;
  const VectorXd dy_shifted = sol.head(m);
  d.dxf = sol.tail(nf);
  const std::vector<MatrixXd> aty = ApplyATPsd(in, dy_shifted);
  d.ds.resize(rc.size());
  d.dx.resize(rc.size());
  for (std::size_t b = 0; b < rc.size(); ++b) {
    // X = W S W holds only to about eps * |W|^2, so dX is formed from the
    // stable W C' W rather than from dS.
    d.ds[b] = -eta * res.rd[b] + nw.c[b] * d.dtau - aty[b];
    d.dx[b] = dmat[b] - d.dtau * nw.wcw[b] + sc.w[b] * aty[b] * sc.w[b];
    d.dx[b] = 0.5 * (d.dx[b] + d.dx[b].transpose());
  }
  const VectorXd aty_l = in.a_lp.transpose() * dy_shifted;
  d.dsl = -eta * res.rdl + nw.cl * d.dtau - aty_l;
  d.dxl = dl - d.dtau * nw.wcw_l + nw.wl2.cwiseProduct(aty_l);
  d.dy = dy_shifted + d.dtau / it.tau * it.y;
  d.dkappa = (rhs_k - it.kappa * d.dtau) / it.tau;
  return d;
}

void Assemble(const SdpProblem& p, const Internal& in, const Iterate& it, SdpSolution& sol) {
  const double inv_tau = 1.0 / it.tau;
  sol.x.resize(p.blocks.size());
  sol.s.resize(p.blocks.size());
  for (std::size_t b = 0; b < p.blocks.size(); ++b) {
    const int n = p.blocks[b].size;
    if (p.blocks[b].kind == BlockKind::kPsd) {
      sol.x[b] = MatrixXd::Zero(n, n);
      sol.s[b] = MatrixXd::Zero(n, n);
    } else {
      sol.x[b] = MatrixXd::Zero(n, 1);
      sol.s[b] = MatrixXd::Zero(n, 1);
    }
  }
  for (std::size_t s = 0; s < in.psd_block.size(); ++s) {
    sol.x[in.psd_block[s]] = it.x[s] * inv_tau;
    sol.s[in.psd_block[s]] = it.s[s] * inv_tau;
  }
  for (std::size_t k = 0; k < in.lp_block.size(); ++k) {
    sol.x[in.lp_block[k]](in.lp_index[k], 0) = it.xl(k) * inv_tau;
    sol.s[in.lp_block[k]](in.lp_index[k], 0) = it.sl(k) * inv_tau;
  }
  for (std::size_t k = 0; k < in.free_block.size(); ++k) {
    sol.x[in.free_block[k]](in.free_index[k], 0) = it.xf(k) * inv_tau;
  }
  sol.y = VectorXd::Zero(p.num_constraints());
  for (int k = 0; k < in.m; ++k) sol.y(in.kept[k]) = it.y(k) / in.d(k) * inv_tau;
}

}  // namespace

SdpSolution Solve(const SdpProblem& problem, const SolverOptions& opt) {
  problem.Validate();
  Preprocessed pre = Preprocess(problem);
  if (pre.early) return *pre.early;
  const Internal& in = pre.in;
  const int m = in.m;
  const int nf = static_cast<int>(in.c_free.size());

  Iterate it;
  for (const auto& blk : in.psd.blocks) {
    it.x.push_back(MatrixXd::Identity(blk.size, blk.size));
    it.s.push_back(MatrixXd::Identity(blk.size, blk.size));
  }
  it.xl = VectorXd::Ones(in.c_lp.size());
  it.sl = VectorXd::Ones(in.c_lp.size());
  it.xf = VectorXd::Zero(nf);
  it.y = VectorXd::Zero(m);

  SdpSolution sol;
  sol.status = SolveStatus::kMaxIterations;
  KktSolver kkt;
  MatrixXd schur;

  for (int iter = 0;; ++iter) {
    const Residuals res = ComputeResiduals(in, it);
    const double pres = res.rp.cwiseProduct(in.d).norm() / it.tau / (1.0 + in.b_norm);
    const double dnorm = DualResidualNorm(res);
    const double dres = dnorm / it.tau / (1.0 + in.c_norm);
    const double pobj = res.pobj / it.tau, dobj = res.dobj / it.tau;
    const double gap = std::abs(pobj - dobj) / (1.0 + std::abs(pobj) + std::abs(dobj));
    sol.iterations = iter;
    sol.primal_objective = pobj;
    sol.dual_objective = dobj;
    sol.primal_residual = pres;
    sol.dual_residual = dres;
    sol.gap = gap;
    if (opt.verbose) {
      std::fprintf(stderr, "%3d  pobj %+.8e  dobj %+.8e  pres %.2e  dres %.2e  gap %.2e  mu %.2e  tau %.2e  kappa %.2e\n",
                   iter, pobj, dobj, pres, dres, gap, res.mu, it.tau, it.kappa);
    }

    if (pres <= opt.tol_feas && dres <= opt.tol_feas && gap <= opt.tol_gap) {
      sol.status = SolveStatus::kOptimal;
      break;
    }
    // Infeasibility certificates of the homogeneous embedding.
    if (res.dobj > 0.0) {
      double s = (res.rdl + in.c_lp * it.tau).squaredNorm() + (res.rf + in.c_free * it.tau).squaredNorm();
      for (std::size_t b = 0; b < res.rd.size(); ++b) s += (res.rd[b] + in.c_psd[b] * it.tau).squaredNorm();
      if (std::sqrt(s) <= opt.tol_feas * res.dobj) {
        sol.status = SolveStatus::kPrimalInfeasible;
        sol.ray = VectorXd::Zero(problem.num_constraints());
        for (int k = 0; k < m; ++k) sol.ray(in.kept[k]) = it.y(k) / in.d(k) / res.dobj;
        break;
      }
    }
    if (res.pobj < 0.0) {
      const VectorXd ax = res.rp + in.b * it.tau;
      if (ax.cwiseProduct(in.d).norm() <= opt.tol_feas * -res.pobj) {
        sol.status = SolveStatus::kDualInfeasible;
        Iterate ray = it;
        ray.tau = -res.pobj;
        Assemble(problem, in, ray, sol);
        return sol;
      }
    }
    if (iter >= opt.max_iters) break;

    const auto sc = ComputeScaling(it);
    if (!sc) {
      sol.status = SolveStatus::kNumericalFailure;
      break;
    }
    schur = MatrixXd::Zero(m, m);
    kernels::AddPsdSchur(in.psd, sc->w, schur);
    schur.noalias() += in.a_lp * sc->wl.array().square().matrix().asDiagonal() * in.a_lp.transpose();
    schur = 0.5 * (schur + schur.transpose()).eval();
    if (!schur.allFinite() || !kkt.Factor(schur, in.a_free)) {
      sol.status = SolveStatus::kNumericalFailure;
      break;
    }

    const Newton nw = PrepareNewton(in, it, *sc, res, kkt);

    // Predictor.
    std::vector<MatrixXd> rc(it.x.size());
    for (std::size_t b = 0; b < it.x.size(); ++b) rc[b] = -it.x[b];
    const Direction aff = SolveDirection(nw, 1.0, rc, -it.xl, -it.tau * it.kappa);
    ScaledDir sd;
    const double alpha_aff = std::min(1.0, MaxStep(it, *sc, aff, &sd));
    const double sigma = std::clamp(std::pow(1.0 - alpha_aff, 3), 0.0, 1.0);
    const double smu = sigma * res.mu;

    // Corrector.
    for (std::size_t b = 0; b < it.x.size(); ++b) {
      const VectorXd& lam = sc->lambda[b];
      MatrixXd t = -0.5 * (sd.dx[b] * sd.ds[b] + sd.ds[b] * sd.dx[b]);
      t.diagonal() += (smu - lam.array().square()).matrix();
      for (Eigen::Index i = 0; i < t.rows(); ++i)
        for (Eigen::Index j = 0; j < t.cols(); ++j) t(i, j) *= 2.0 / (lam(i) + lam(j));
      rc[b] = sc->r[b] * t * sc->r[b].transpose();
      rc[b] = 0.5 * (rc[b] + rc[b].transpose()).eval();
    }
    const VectorXd tl = (smu - sc->lambda_l.array().square() - aff.dxl.array() * aff.dsl.array()).matrix();
    const VectorXd rcl = sc->wl.cwiseProduct(tl.cwiseQuotient(sc->lambda_l));
    const double rhs_k = smu - it.tau * it.kappa - aff.dtau * aff.dkappa;
    const Direction dir = SolveDirection(nw, 1.0 - sigma, rc, rcl, rhs_k);

    const double amax = MaxStep(it, *sc, dir, nullptr);
    const double alpha = std::min(1.0, opt.step_fraction * amax);
    if (!(alpha > 1e-10) || !dir.dy.allFinite()) {
      sol.status = SolveStatus::kNumericalFailure;
      break;
    }
    for (std::size_t b = 0; b < it.x.size(); ++b) {
      it.x[b] += alpha * dir.dx[b];
      it.s[b] += alpha * dir.ds[b];
      it.x[b] = 0.5 * (it.x[b] + it.x[b].transpose()).eval();
      it.s[b] = 0.5 * (it.s[b] + it.s[b].transpose()).eval();
    }
    it.xl += alpha * dir.dxl;
    it.sl += alpha * dir.dsl;
    it.xf += alpha * dir.dxf;
    it.y += alpha * dir.dy;
    it.tau += alpha * dir.dtau;
    it.kappa += alpha * dir.dkappa;
  }

  Assemble(problem, in, it, sol);
  return sol;
}

}  // namespace attrakt::sdp
