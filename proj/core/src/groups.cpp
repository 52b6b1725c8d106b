#include "gsae/groups.hpp"

#include <Eigen/SVD>

#include "gsae/errors.hpp"

namespace gsae {

void GroupStructure::validate() const {
  if (num_groups <= 0 || group_size <= 0) {
    throw ConfigError("group structure requires positive num_groups and group_size");
  }
}

bool GroupedDictionary::columns_normalized(double tol) const {
  for (Eigen::Index j = 0; j < matrix.cols(); ++j) {
    if (std::abs(matrix.col(j).norm() - 1.0) > tol) return false;
  }
  return true;
}

void GroupedDictionary::validate() const {
  structure.validate();
  if (matrix.cols() != structure.total_columns()) {
    throw DimensionError("dictionary has " + std::to_string(matrix.cols()) +
                         " columns but structure expects " +
                         std::to_string(structure.total_columns()));
  }
  if (matrix.rows() <= 0) {
    throw DimensionError("dictionary must have at least one row");
  }
}

Eigen::VectorXd group_norms(const Eigen::VectorXd& x, const GroupStructure& gs) {
  gs.validate();
  if (x.size() != gs.total_columns()) {
    throw DimensionError("vector length " + std::to_string(x.size()) +
                         " does not match structure width " +
                         std::to_string(gs.total_columns()));
  }
  Eigen::VectorXd norms(gs.num_groups);
  for (int g = 0; g < gs.num_groups; ++g) {
    norms(g) = x.segment(gs.first_column(g), gs.group_size).norm();
  }
  return norms;
}

std::vector<int> group_support(const Eigen::VectorXd& x, const GroupStructure& gs,
                               double tol) {
  const Eigen::VectorXd norms = group_norms(x, gs);
  std::vector<int> support;
  for (int g = 0; g < gs.num_groups; ++g) {
    if (norms(g) > tol) support.push_back(g);
  }
  return support;
}

double block_coherence(const GroupedDictionary& dict) {
  dict.validate();
  const int ng = dict.structure.num_groups;
  if (ng < 2) {
    throw ConfigError("block coherence needs at least two groups");
  }
  const double d = static_cast<double>(dict.structure.group_size);
  double mu = 0.0;
  Eigen::MatrixXd cross(dict.structure.group_size, dict.structure.group_size);
  for (int g = 0; g < ng; ++g) {
    for (int h = g + 1; h < ng; ++h) {
      cross.noalias() = dict.block(g).transpose() * dict.block(h);
      const double smax =
          cross.jacobiSvd().singularValues()(0);
      mu = std::max(mu, smax / d);
    }
  }
  return mu;
}

double column_coherence(const Eigen::MatrixXd& matrix) {
  if (matrix.cols() < 2) {
    throw ConfigError("column coherence needs at least two columns");
  }
  double mu = 0.0;
  for (Eigen::Index i = 0; i < matrix.cols(); ++i) {
    for (Eigen::Index j = i + 1; j < matrix.cols(); ++j) {
      mu = std::max(mu, std::abs(matrix.col(i).dot(matrix.col(j))));
    }
  }
  return mu;
}

}  // namespace gsae
