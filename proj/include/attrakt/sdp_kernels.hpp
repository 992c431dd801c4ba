#pragma once

// Schur-complement assembly for the interior-point solver. The OpenMP kernel
// is the production path; the serial dense kernel is the reference it is
// tested and benchmarked against.

#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace attrakt::sdp::kernels {

struct LocalEntry {
  int row;  // row >= col
  int col;
  double value;
};

struct ConstraintBlock {
  int constraint;
  std::vector<LocalEntry> entries;
};

struct PsdBlockData {
  int size = 0;
  std::vector<ConstraintBlock> cons;  // constraints with support in this block
};

struct PsdStructure {
  int num_constraints = 0;
  std::vector<PsdBlockData> blocks;
  // For constraint j: (block, position in blocks[block].cons).
  std::vector<std::vector<std::pair<int, int>>> by_constraint;

  void Index();  // rebuilds by_constraint from blocks
};

/// M(i, j) += sum_b <A_i^b, W_b A_j^b W_b>, parallel over columns j.
void AddPsdSchur(const PsdStructure& s, const std::vector<Eigen::MatrixXd>& w, Eigen::MatrixXd& m);

/// Same quantity through dense trace products, single-threaded.
void AddPsdSchurSerial(const PsdStructure& s, const std::vector<Eigen::MatrixXd>& w,
                       Eigen::MatrixXd& m);

}  // namespace attrakt::sdp::kernels
