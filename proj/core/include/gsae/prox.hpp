#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "gsae/groups.hpp"

namespace gsae {

// Shrinkage nonlinearity applied after the linear encoder step.
enum class ProxKind {
  GroupSoftThreshold,  // blockwise (1 - lambda/||v_g||)+ v_g
  SoftThreshold,       // elementwise sign(v) (|v| - lambda)+
  Relu,                // elementwise (v - lambda)+
};

std::string to_string(ProxKind kind);
ProxKind prox_kind_from_string(const std::string& name);

// Iterative shrinkage configuration. An empty step means "use
// default_ista_step(dict)". With scale_lambda_by_step the shrinkage amount per
// iteration is step*lambda (the proximal-gradient reading of the objective);
// without it the raw lambda is used.
struct IstaConfig {
  std::optional<double> step;
  int iterations = 1;
  double lambda = 0.0;
  bool scale_lambda_by_step = true;

  void validate() const;
};

// Blockwise shrinkage: each group is pulled toward zero by lambda in norm,
// vanishing groups map to exact zeros.
Eigen::VectorXd group_prox(const Eigen::VectorXd& v, double lambda,
                           const GroupStructure& gs);

Eigen::VectorXd soft_threshold(const Eigen::VectorXd& v, double lambda);

// (v - lambda)+ elementwise.
Eigen::VectorXd shifted_relu(const Eigen::VectorXd& v, double lambda);

Eigen::VectorXd apply_prox(const Eigen::VectorXd& v, double lambda, ProxKind kind,
                           const GroupStructure& gs);

// Action w -> J(u) w of the shrinkage's Jacobian at pre-activation u. On an
// active group the group prox has J = (1 - lambda/||u||) I + lambda u u^T /
// ||u||^3; inactive coordinates (at or below threshold) map to zero, taking
// the zero element of the subdifferential at the boundary.
Eigen::VectorXd prox_jacobian_apply(const Eigen::VectorXd& u,
                                    const Eigen::VectorXd& w, double lambda,
                                    ProxKind kind, const GroupStructure& gs);

// 1 / lambda_max(A^T A), the classical guaranteed step for the quadratic part.
double default_ista_step(const GroupedDictionary& dict);

// 0.5 ||y - A x||^2 + lambda * sum_g ||x_g||_2.
double group_objective(const Eigen::VectorXd& y, const GroupedDictionary& dict,
                       const Eigen::VectorXd& x, double lambda);

struct IstaResult {
  GroupSparseCode code;
  std::vector<double> objectives;  // group objective, iterations+1 entries
  double step = 0.0;               // the step actually used
};

// Proximal gradient on the group objective: x <- prox(x + step A^T (y - Ax)).
// An empty init starts from zero.
IstaResult group_ista_full(const Eigen::VectorXd& y, const GroupedDictionary& dict,
                           const IstaConfig& cfg,
                           const Eigen::VectorXd& init = Eigen::VectorXd());

GroupSparseCode group_ista(const Eigen::VectorXd& y, const GroupedDictionary& dict,
                           const IstaConfig& cfg,
                           const Eigen::VectorXd& init = Eigen::VectorXd());

// Codes all columns of y at once (any prox kind). Columns are processed in
// fixed 64-column tiles so results do not depend on the thread count. An
// empty init starts every column from zero.
Eigen::MatrixXd batch_ista(const Eigen::MatrixXd& y, const GroupedDictionary& dict,
                           const IstaConfig& cfg, ProxKind kind,
                           const Eigen::MatrixXd& init = Eigen::MatrixXd());

struct DictUpdateResult {
  Eigen::MatrixXd dictionary;
  bool ridged = false;  // normal equations needed a ridge to factor
};

// argmin_A 0.5 ||Y - A X||_F^2 via normal equations restricted to the rows of
// X that are not identically zero; columns of A for zero rows are copied from
// `previous`.
DictUpdateResult dictionary_update_ls(const Eigen::MatrixXd& y,
                                      const Eigen::MatrixXd& x,
                                      const Eigen::MatrixXd& previous);

struct AltMinResult {
  GroupedDictionary dictionary;
  Eigen::MatrixXd codes;
  std::vector<double> objectives;  // recorded after each coding pass
  bool ridged = false;
};

// Classical alternating scheme: code all columns (warm-started), record the
// penalized objective, refit the dictionary by least squares, renormalize its
// columns and rescale code rows so the product is preserved. `lambda`
// overrides ista_cfg.lambda.
AltMinResult alternating_minimization(const Eigen::MatrixXd& y,
                                      const GroupedDictionary& init, double lambda,
                                      const IstaConfig& ista_cfg, int outer_iters);

}  // namespace gsae
