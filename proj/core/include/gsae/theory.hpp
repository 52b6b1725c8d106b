#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "gsae/autoencoder.hpp"
#include "gsae/groups.hpp"
#include "gsae/synth.hpp"

namespace gsae {

// Scalar model constants the recovery analysis is phrased in. delta and zeta
// quantify the distance between the current and generating dictionaries
// (groupwise), mu_b the generating dictionary's block coherence.
struct ModelBounds {
  double b_min = 0.0;  // lower bound on active group code norms
  double b_max = 0.0;  // upper bound
  double delta = 0.0;  // max_g ||A_g - A*_g||_F
  double zeta = 0.0;   // max_g ||A_g^T A*_g||_F
  double mu_b = 0.0;   // block coherence of the generating dictionary
  int gamma = 0;       // active groups per sample
  GroupStructure structure;

  // Probability that a fixed group is active under uniform support sampling.
  double p_g() const;

  void validate() const;
};

// delta, zeta, mu_b measured from a dictionary pair; b_min/b_max/gamma are
// supplied by the caller (from the generating configuration or realized code
// norms).
ModelBounds measure_bounds(const GroupedDictionary& dict,
                           const GroupedDictionary& dict_star, int gamma,
                           double b_min, double b_max);

// B_min (1 - delta): worst-case norm of the aligned term A_g^T A*_g x*_g.
double group_norm_lower_bound(const ModelBounds& b);

// gamma B_max (mu_b + delta): worst-case norm of the cross term
// sum_{h in S} A_v^T A*_h x*_h.
double cross_term_upper_bound(const ModelBounds& b);

// Threshold window [cross, lower - cross] inside which one shrinkage step
// separates active from inactive groups; empty when the window collapses.
std::optional<std::pair<double, double>> lambda_range(const ModelBounds& b);

struct SupportBoundReport {
  double delta_hat = 0.0;
  double mu_b_hat = 0.0;
  double b_min_hat = 0.0;        // smallest realized active-group code norm
  double b_max_hat = 0.0;        // largest
  double active_floor = 0.0;     // B_min(1-delta) - gamma B_max(mu_b+delta)
  double inactive_ceiling = 0.0; // gamma B_max(mu_b+delta)
  long active_checks = 0;
  long inactive_checks = 0;
  long active_violations = 0;    // active group norm below the floor
  long inactive_violations = 0;  // inactive group norm above the ceiling
  long triangle_violations = 0;  // ||A_v^T y|| above its direct triangle sum
  double min_active_margin = 0.0;
  double min_inactive_margin = 0.0;
};

// Checks every sample of a noiseless dataset against the worst-case
// active/inactive norm bounds computed from measured delta, mu_b and realized
// code norms, plus the per-sample triangle inequality
// ||A_v^T y|| <= sum_h ||A_v^T A*_h x*_h||.
SupportBoundReport verify_support_bounds(const GroupedDictionary& dict,
                                         const Dataset& dataset);

struct AlignmentReport {
  Eigen::VectorXd inner;        // per column: <mean gradient col, a_i - a*_i>
  Eigen::VectorXd inner_se;     // Monte Carlo standard error of each inner
  Eigen::VectorXd alpha;        // a*_i^T a_i
  Eigen::VectorXd omega;        // max_{j != i, same group} |a*_j^T a_i|
  Eigen::VectorXd alignment_rhs;  // unit-constant alignment lower bound, per col
  Eigen::VectorXd tau_bar;      // per group: mean tau over activations
  Eigen::VectorXd tau_sd;       // per group: tau spread
  Eigen::VectorXd active_count; // per group: samples where it was active
  double epsilon_unit = 0.0;    // (mu_b + delta)^2 gamma^5 / Gamma^3
  bool lambda_in_range = true;  // false: separation window missed lambda
  long num_mc = 0;
};

// Monte Carlo estimate of the expected scaling-substitution gradient at
// `dict`, generated from `dict_star` under cfg (cfg.num_samples is ignored;
// num_mc fresh samples are drawn from cfg.seed). Reports the per-column
// alignment inner products with their standard errors and the measured
// geometry entering the alignment bound.
AlignmentReport expected_gradient_mc(const GroupedDictionary& dict,
                                     const GroupedDictionary& dict_star,
                                     const SynthConfig& cfg, double lambda,
                                     long num_mc);

// Geometry scalars entering the contraction factor, measured at (or near) the
// start of a training run.
struct GeometryStats {
  double tau_bar = 0.0;    // mean shrinkage survival factor over activations
  double alpha_min = 0.0;  // min_i a*_i^T a_i
  double alpha_max = 0.0;
  double omega_max = 0.0;  // max_i max_{j != i, same group} |a*_j^T a_i|
  int signal_dim = 0;
};

// alpha/omega extremes of a dictionary pair plus the mean tau of the group
// shrinkage on the given observations at threshold lambda.
GeometryStats measure_geometry(const GroupedDictionary& dict,
                               const GroupedDictionary& dict_star,
                               const Eigen::MatrixXd& observations,
                               double lambda);

struct ContractionReport {
  Eigen::MatrixXd ratios;            // (epochs) x (num_groups) squared-error ratios
  Eigen::VectorXd per_group_median;  // median ratio per group
  double rho = 0.0;                  // predicted contraction factor (NaN if degenerate)
  double eta_max = 0.0;              // step ceiling 1/(tau(2-tau) p alpha_max)
  double additive_unit = 0.0;        // d (mu_b+delta)^2 gamma^4 / Gamma^2
  double additive_log = 0.0;         // d log^2(n) / Gamma^2
  double precondition_lhs = 0.0;     // zeta^2
  double precondition_rhs = 0.0;     // tau-dependent admissibility bound
  bool precondition_holds = false;
  bool alpha_min_nonpositive = false;
  std::vector<int> flagged_epochs;   // epochs whose median ratio exceeds 1
                                     // after subtracting additive_unit
};

// Per-epoch squared per-group error ratios from a training history, compared
// against the predicted contraction factor rho built from measured geometry.
ContractionReport contraction_trace(const TrainHistory& history,
                                    const ModelBounds& b, double eta,
                                    const GeometryStats& geometry);

}  // namespace gsae
