#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <vector>

#include "gsae/groups.hpp"
#include "gsae/prox.hpp"
#include "gsae/synth.hpp"

namespace gsae {

// Tied-weight autoencoder: encoder x = sigma_lambda(A^T y) (or its unrolled
// T-step refinement), decoder y_hat = A x. The single matrix A is both
// encoder and decoder parameter.
struct AutoencoderState {
  GroupedDictionary dict;
  double lambda = 0.0;
  ProxKind prox = ProxKind::GroupSoftThreshold;
  int unroll = 1;
  // Step used by the unrolled encoder. Empty means 1/lambda_max(A^T A),
  // re-resolved against the current weights whenever they change; tests pin
  // it so the encoder is an exactly differentiable function of A.
  std::optional<double> ista_step;

  void validate() const;
};

enum class Optimizer { PlainGd, Adam };

struct TrainConfig {
  Optimizer optimizer = Optimizer::Adam;
  double learning_rate = 1e-3;
  int epochs = 1;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps_adam = 1e-8;
  bool normalize_columns_for_metric = true;
  double divergence_guard = 1e12;
  std::uint64_t seed = 0;  // reserved: full-batch training draws nothing

  void validate() const;
};

// Ground truth hooks for metric recording. Either pointer may be null; the
// corresponding metrics are then NaN / empty. Pointees must outlive train().
struct TruthRef {
  const GroupedDictionary* dictionary = nullptr;
  const std::vector<std::vector<int>>* supports = nullptr;
};

struct EpochRecord {
  int epoch = 0;
  double loss = 0.0;
  double dict_error = 0.0;            // NaN without a truth dictionary
  double support_rate = 0.0;          // NaN without truth supports
  Eigen::VectorXd group_errors;       // ||A_g - A*_g||_F; empty without truth
};

struct TrainHistory {
  std::vector<EpochRecord> records;  // epochs + 1 entries, epoch 0 first
};

GroupSparseCode encode(const AutoencoderState& ae, const Eigen::VectorXd& y);

Eigen::VectorXd decode(const AutoencoderState& ae, const Eigen::VectorXd& x);

// All codes at once, columns in fixed 64-wide tiles (thread-count
// independent).
Eigen::MatrixXd batch_encode(const AutoencoderState& ae, const Eigen::MatrixXd& y);

// (1/2N) sum_i ||y_i - decode(encode(y_i))||^2.
double loss(const AutoencoderState& ae, const Eigen::MatrixXd& y);

// Exact single-sample gradient of 0.5||y - A sigma(A^T y)||^2 with respect to
// A, using the true shrinkage Jacobian on active groups and the zero
// subgradient at thresholds. Requires unroll == 1.
Eigen::MatrixXd gradient_analytic(const AutoencoderState& ae,
                                  const Eigen::VectorXd& y);

// Gradient surrogate for the group shrinkage obtained by treating each active
// group's nonlinearity as the constant scaling tau_g = 1 - lambda/||A_g^T y||:
// grad_g = -tau_g [r y^T + y r^T] A_g with r = (I - A_S diag(tau) A_S^T) y on
// the active set, zero on inactive groups. Requires unroll == 1 and the group
// shrinkage.
Eigen::MatrixXd gradient_approx(const AutoencoderState& ae,
                                const Eigen::VectorXd& y);

struct BatchEval {
  Eigen::MatrixXd gradient;   // mean per-sample gradient
  double loss = 0.0;          // (1/2N) sum of squared residuals
  double support_rate = 0.0;  // NaN when truth supports are absent
};

// One full-batch pass: mean gradient (exact chain rule through the encoder,
// unrolled when ae.unroll > 1), loss, and exact-support match rate against
// the optional truth supports. Per-tile partial sums are folded in tile order
// so the result is independent of the thread count.
BatchEval batch_gradient(const AutoencoderState& ae, const Eigen::MatrixXd& y,
                         const std::vector<std::vector<int>>* truth_supports = nullptr);

// Full-batch training, mutating ae.dict in place. Records metrics before the
// first update (epoch 0) and after every epoch: records.size() == epochs + 1.
// Weight columns are never renormalized during training. Throws
// ConvergenceError when the loss exceeds cfg.divergence_guard or turns
// non-finite.
TrainHistory train(AutoencoderState& ae, const Eigen::MatrixXd& y,
                   const TrainConfig& cfg, const TruthRef& truth = {});

// ||normalize(A) - normalize(A*)||_F^2, columns compared index to index.
// Throws NumericError on a zero column.
double normalized_dict_error(const Eigen::MatrixXd& a,
                             const Eigen::MatrixXd& a_star);

// Raw per-group distances ||A_g - A*_g||_F.
Eigen::VectorXd per_group_errors(const Eigen::MatrixXd& a,
                                 const Eigen::MatrixXd& a_star,
                                 const GroupStructure& gs);

// Fraction of dataset samples whose encoded group support equals the true
// support exactly. For elementwise shrinkages a group is active when any of
// its entries is nonzero.
double support_recovery_rate(const AutoencoderState& ae, const Dataset& dataset);

}  // namespace gsae
