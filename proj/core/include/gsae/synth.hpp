#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "gsae/groups.hpp"
#include "gsae/rng.hpp"

namespace gsae {

// Configuration of the group-sparse generative model y = A x + z.
struct SynthConfig {
  int signal_dim = 0;        // rows of the dictionary
  GroupStructure structure;  // column groups of the dictionary
  int active_groups = 0;     // nonzero groups per code
  int num_samples = 0;
  double scale_low = 4.0;    // per-group magnitude range
  double scale_high = 5.0;
  std::optional<double> snr_db;  // empty means noiseless
  std::uint64_t seed = 0;

  // Throws ConfigError on any violated bound.
  void validate() const;
};

// A generated dataset. `observations = dictionary * codes + noise` holds
// bit-exactly when the product is evaluated as a single matrix product.
struct Dataset {
  GroupedDictionary dictionary;
  std::vector<GroupSparseCode> codes;
  Eigen::MatrixXd observations;  // signal_dim x num_samples
  Eigen::MatrixXd noise;         // same shape; zero when noiseless
  std::optional<double> noise_snr_db;

  // Codes stacked as columns (total_columns x num_samples).
  Eigen::MatrixXd codes_matrix() const;
  std::vector<std::vector<int>> supports() const;
};

// Gaussian dictionary with unit-norm columns. Column j is filled from its own
// RNG stream so serial and blocked generation agree bit for bit.
GroupedDictionary sample_dictionary(const SynthConfig& cfg, Rng& rng);

// One code: active_groups distinct groups drawn uniformly, each active group
// set to a unit Gaussian direction scaled by c ~ Uniform(scale_low,
// scale_high); inactive entries are exactly zero.
GroupSparseCode sample_code(const SynthConfig& cfg, Rng& rng);

// Per-column white Gaussian noise with variance chosen so that the expected
// column SNR equals snr_db: sigma_i^2 = ||y_i||^2 / (rows * 10^(snr_db/10)).
// Returns (Y + Z, Z). A zero column cannot carry an SNR; throws NumericError.
std::pair<Eigen::MatrixXd, Eigen::MatrixXd> add_noise(const Eigen::MatrixXd& y,
                                                      double snr_db, Rng& rng);

// A + sigma*B for a single Gaussian draw B, with sigma bisected so the mean
// over columns of corr_i = a_i^T (perturbed_i / ||perturbed_i||) lands within
// 0.02 of target_corr. Requires a column-normalized input. target_corr at or
// above 1 - 1e-12 returns the input unchanged. With normalize_columns the
// result's columns are rescaled to unit norm (the correlation measure is
// unaffected: it normalizes internally either way).
GroupedDictionary perturb_init(const GroupedDictionary& dict, double target_corr,
                               Rng& rng, bool normalize_columns = true);

// Full pipeline: dictionary, codes, observations, optional noise. Determined
// entirely by cfg (including cfg.seed); thread-count independent.
Dataset generate(const SynthConfig& cfg);

}  // namespace gsae
