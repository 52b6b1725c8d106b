#pragma once

#include <Eigen/Dense>
#include <vector>

namespace gsae {

// Contiguous, equal-size column groups: group g owns columns
// [g*group_size, (g+1)*group_size). No other layout is supported.
struct GroupStructure {
  int num_groups = 0;
  int group_size = 0;

  int total_columns() const { return num_groups * group_size; }
  int first_column(int g) const { return g * group_size; }

  // Throws ConfigError unless both sizes are positive.
  void validate() const;

  bool operator==(const GroupStructure&) const = default;
};

// Dictionary matrix (signal_dim x num_groups*group_size) whose columns carry
// a group structure.
struct GroupedDictionary {
  Eigen::MatrixXd matrix;
  GroupStructure structure;

  Eigen::Index rows() const { return matrix.rows(); }
  Eigen::Index cols() const { return matrix.cols(); }

  // View of group g's columns.
  Eigen::MatrixXd::ConstColsBlockXpr block(int g) const {
    return matrix.middleCols(structure.first_column(g), structure.group_size);
  }
  Eigen::MatrixXd::ColsBlockXpr block(int g) {
    return matrix.middleCols(structure.first_column(g), structure.group_size);
  }

  bool columns_normalized(double tol = 1e-10) const;

  // Throws DimensionError if matrix width disagrees with the structure.
  void validate() const;
};

// A code vector together with its active groups (sorted group ids).
struct GroupSparseCode {
  Eigen::VectorXd values;
  std::vector<int> support;
};

// Per-group Euclidean norms of x; length num_groups.
Eigen::VectorXd group_norms(const Eigen::VectorXd& x, const GroupStructure& gs);

// Sorted ids of groups whose norm exceeds tol.
std::vector<int> group_support(const Eigen::VectorXd& x, const GroupStructure& gs,
                               double tol = 1e-12);

// Block coherence: max over group pairs g != h of (1/d)*sigma_max(A_g^T A_h).
// Meaningful for column-normalized dictionaries; needs at least two groups.
double block_coherence(const GroupedDictionary& dict);

// Column coherence: max over i != j of |a_i^T a_j|; needs at least two
// columns. For normalized dictionaries 0 <= block_coherence <= this <= 1.
double column_coherence(const Eigen::MatrixXd& matrix);

}  // namespace gsae
