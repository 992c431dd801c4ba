#include "attrakt/sdp_kernels.hpp"

namespace attrakt::sdp::kernels {

void PsdStructure::Index() {
  by_constraint.assign(num_constraints, {});
  for (int b = 0; b < static_cast<int>(blocks.size()); ++b) {
    for (int k = 0; k < static_cast<int>(blocks[b].cons.size()); ++k) {
      by_constraint[blocks[b].cons[k].constraint].emplace_back(b, k);
    }
  }
}

namespace {

// Dense W A W for a sparse symmetric A given by its lower-triangle entries.
void ScaledProduct(const Eigen::MatrixXd& w, const std::vector<LocalEntry>& a, Eigen::MatrixXd& out) {
  out.setZero(w.rows(), w.cols());
  for (const LocalEntry& e : a) {
    out.noalias() += e.value * w.col(e.row) * w.row(e.col);
    if (e.row != e.col) out.noalias() += e.value * w.col(e.col) * w.row(e.row);
  }
}

double SparseInner(const std::vector<LocalEntry>& a, const Eigen::MatrixXd& g) {
  double s = 0.0;
  for (const LocalEntry& e : a) {
    s += e.row == e.col ? e.value * g(e.row, e.col)
                        : e.value * (g(e.row, e.col) + g(e.col, e.row));
  }
  return s;
}

Eigen::MatrixXd Densify(int size, const std::vector<LocalEntry>& a) {
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(size, size);
  for (const LocalEntry& e : a) {
    d(e.row, e.col) += e.value;
    if (e.row != e.col) d(e.col, e.row) += e.value;
  }
  return d;
}

}  // namespace

void AddPsdSchur(const PsdStructure& s, const std::vector<Eigen::MatrixXd>& w, Eigen::MatrixXd& m) {
  const int nc = s.num_constraints;
#pragma omp parallel
  {
    Eigen::MatrixXd g;
#pragma omp for schedule(dynamic, 4)
    for (int j = 0; j < nc; ++j) {
      for (const auto& [b, k] : s.by_constraint[j]) {
        const PsdBlockData& blk = s.blocks[b];
        ScaledProduct(w[b], blk.cons[k].entries, g);
        for (const ConstraintBlock& ci : blk.cons) m(ci.constraint, j) += SparseInner(ci.entries, g);
      }
    }
  }
}

void AddPsdSchurSerial(const PsdStructure& s, const std::vector<Eigen::MatrixXd>& w,
                       Eigen::MatrixXd& m) {
  for (std::size_t b = 0; b < s.blocks.size(); ++b) {
    const PsdBlockData& blk = s.blocks[b];
    std::vector<Eigen::MatrixXd> dense;
    dense.reserve(blk.cons.size());
    for (const ConstraintBlock& c : blk.cons) dense.push_back(Densify(blk.size, c.entries));
    for (std::size_t q = 0; q < blk.cons.size(); ++q) {
      const Eigen::MatrixXd waw = w[b] * dense[q] * w[b];
      for (std::size_t p = 0; p < blk.cons.size(); ++p) {
        m(blk.cons[p].constraint, blk.cons[q].constraint) += (dense[p] * waw).trace();
      }
    }
  }
}

}  // namespace attrakt::sdp::kernels
