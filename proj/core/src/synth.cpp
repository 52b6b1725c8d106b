#include "gsae/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "gsae/errors.hpp"
#include "gsae/parallel.hpp"

namespace gsae {

namespace {

// Stream tags keep the per-purpose RNG sequences disjoint.
constexpr std::uint64_t kTagDictionary = 1;
constexpr std::uint64_t kTagCode = 2;
constexpr std::uint64_t kTagNoise = 3;
constexpr std::uint64_t kTagPerturb = 4;

constexpr int kBlock = 64;

}  // namespace

void SynthConfig::validate() const {
  structure.validate();
  if (signal_dim <= 0) throw ConfigError("signal_dim must be positive");
  if (active_groups < 1 || active_groups > structure.num_groups) {
    throw ConfigError("active_groups must lie in [1, num_groups]");
  }
  if (num_samples < 1) throw ConfigError("num_samples must be at least 1");
  if (!(scale_low <= scale_high)) {
    throw ConfigError("scale_low must not exceed scale_high");
  }
  if (scale_low < 0.0) throw ConfigError("scale_low must be nonnegative");
  if (snr_db && !std::isfinite(*snr_db)) {
    throw ConfigError("snr_db must be finite; omit it for noiseless data");
  }
}

Eigen::MatrixXd Dataset::codes_matrix() const {
  const Eigen::Index m = dictionary.structure.total_columns();
  Eigen::MatrixXd x(m, static_cast<Eigen::Index>(codes.size()));
  for (std::size_t i = 0; i < codes.size(); ++i) {
    if (codes[i].values.size() != m) {
      throw DimensionError("code " + std::to_string(i) + " has length " +
                           std::to_string(codes[i].values.size()) +
                           ", expected " + std::to_string(m));
    }
    x.col(static_cast<Eigen::Index>(i)) = codes[i].values;
  }
  return x;
}

std::vector<std::vector<int>> Dataset::supports() const {
  std::vector<std::vector<int>> s(codes.size());
  for (std::size_t i = 0; i < codes.size(); ++i) s[i] = codes[i].support;
  return s;
}

GroupedDictionary sample_dictionary(const SynthConfig& cfg, Rng& rng) {
  cfg.validate();
  if (cfg.signal_dim < cfg.structure.group_size) {
    throw ConfigError("signal_dim must be at least group_size");
  }
  const int m = cfg.structure.total_columns();
  GroupedDictionary dict;
  dict.structure = cfg.structure;
  dict.matrix.resize(cfg.signal_dim, m);
  const std::uint64_t base = rng.next_u64();
  parallel_blocks(m, kBlock, [&](std::size_t, std::size_t begin, std::size_t end) {
    for (std::size_t j = begin; j < end; ++j) {
      Rng col = Rng::stream(base, kTagDictionary, j);
      for (int i = 0; i < cfg.signal_dim; ++i) {
        dict.matrix(i, static_cast<Eigen::Index>(j)) = col.normal();
      }
      const double norm = dict.matrix.col(static_cast<Eigen::Index>(j)).norm();
      if (norm == 0.0) throw NumericError("sampled a zero dictionary column");
      dict.matrix.col(static_cast<Eigen::Index>(j)) /= norm;
    }
  });
  return dict;
}

GroupSparseCode sample_code(const SynthConfig& cfg, Rng& rng)
{
  cfg.validate();
  const int ng = cfg.structure.num_groups;
  const int d = cfg.structure.group_size;

  // Partial Fisher-Yates over group ids: the first active_groups slots are a
  // uniform draw without replacement.
  std::vector<int> ids(ng);
  std::iota(ids.begin(), ids.end(), 0);
  for (int k = 0; k < cfg.active_groups; ++k) {
    const std::uint64_t pick =
        k + rng.below(static_cast<std::uint64_t>(ng - k));
    std::swap(ids[k], ids[static_cast<int>(pick)]);
  }
  GroupSparseCode code;
  code.support.assign(ids.begin(), ids.begin() + cfg.active_groups);
  std::sort(code.support.begin(), code.support.end());

  code.values = Eigen::VectorXd::Zero(cfg.structure.total_columns());
  for (const int g : code.support) {
    Eigen::VectorXd v(d);
    double norm = 0.0;
    // Unit Gaussian directions almost surely have positive norm; redraw the
    // measure-zero failure rather than dividing by zero.
    do {
      for (int i = 0; i < d; ++i) v(i) = rng.normal();
      norm = v.norm();
    } while (norm == 0.0);
    const double scale = rng.uniform(cfg.scale_low, cfg.scale_high);
    code.values.segment(cfg.structure.first_column(g), d) = v * (scale / norm);
  }
  return code;
}

std::pair<Eigen::MatrixXd, Eigen::MatrixXd> add_noise(const Eigen::MatrixXd& y,
                                                      double snr_db, Rng& rng) {
  if (y.size() == 0) throw DimensionError("cannot add noise to an empty matrix");
  if (!std::isfinite(snr_db)) throw ConfigError("snr_db must be finite");
  const double factor = std::pow(10.0, snr_db / 10.0);
  Eigen::MatrixXd z(y.rows(), y.cols());
  const std::uint64_t base = rng.next_u64();
  parallel_blocks(static_cast<std::size_t>(y.cols()), kBlock,
                  [&](std::size_t, std::size_t begin, std::size_t end) {
    for (std::size_t jj = begin; jj < end; ++jj) {
      const auto j = static_cast<Eigen::Index>(jj);
      const double energy = y.col(j).squaredNorm();
      if (energy == 0.0) {
        throw NumericError("column " + std::to_string(jj) +
                           " is zero; its SNR is undefined");
      }
      const double sigma =
          std::sqrt(energy / (static_cast<double>(y.rows()) * factor));
      Rng col = Rng::stream(base, kTagNoise, jj);
      for (Eigen::Index i = 0; i < y.rows(); ++i) z(i, j) = sigma * col.normal();
    }
  });
  return {y + z, std::move(z)};
}

GroupedDictionary perturb_init(const GroupedDictionary& dict, double target_corr,
                               Rng& rng, bool normalize_columns) {
  dict.validate();
  if (!dict.columns_normalized(1e-8)) {
    throw ConfigError("perturbation requires a column-normalized dictionary");
  }
  if (!(target_corr > 0.0) || target_corr > 1.0) {
    throw ConfigError("target_corr must lie in (0, 1]");
  }
  GroupedDictionary out = dict;
  if (target_corr >= 1.0 - 1e-12) return out;

  // One fixed Gaussian draw; only its scale is calibrated.
  Eigen::MatrixXd b(dict.rows(), dict.cols());
  const std::uint64_t base = rng.next_u64();
  parallel_blocks(static_cast<std::size_t>(dict.cols()), kBlock,
                  [&](std::size_t, std::size_t begin, std::size_t end) {
    for (std::size_t jj = begin; jj < end; ++jj) {
      Rng col = Rng::stream(base, kTagPerturb, jj);
      for (Eigen::Index i = 0; i < dict.rows(); ++i) {
        b(i, static_cast<Eigen::Index>(jj)) = col.normal();
      }
    }
  });

  const auto mean_corr = [&](double sigma) {
    double sum = 0.0;
    for (Eigen::Index j = 0; j < dict.cols(); ++j) {
      const Eigen::VectorXd pert = dict.matrix.col(j) + sigma * b.col(j);
      const double norm = pert.norm();
      if (norm == 0.0) throw NumericError("perturbed column collapsed to zero");
      sum += dict.matrix.col(j).dot(pert) / norm;
    }
    return sum / static_cast<double>(dict.cols());
  };

  // Mean correlation decreases in sigma for this fixed draw; bracket then
  // bisect.
  double lo = 0.0;
  double hi = 1.0;
  int doublings = 0;
  while (mean_corr(hi) > target_corr) {
    hi *= 2.0;
    if (++doublings >= 60) {
      throw ConvergenceError("could not bracket the perturbation scale");
    }
  }
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mean_corr(mid) > target_corr) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  const double sigma = 0.5 * (lo + hi);
  const double achieved = mean_corr(sigma);
  if (std::abs(achieved - target_corr) > 0.02) {
    throw ConvergenceError("perturbation calibration missed the target: " +
                           std::to_string(achieved) + " vs " +
                           std::to_string(target_corr));
  }

  out.matrix = dict.matrix + sigma * b;
  if (normalize_columns) {
    for (Eigen::Index j = 0; j < out.matrix.cols(); ++j) {
      out.matrix.col(j) /= out.matrix.col(j).norm();
    }
  }
  return out;
}

Dataset generate(const SynthConfig& cfg) {
  cfg.validate();
  Rng master(cfg.seed);

  Dataset ds;
  ds.dictionary = sample_dictionary(cfg, master);

  ds.codes.resize(static_cast<std::size_t>(cfg.num_samples));
  const std::uint64_t code_base = master.next_u64();
  parallel_blocks(static_cast<std::size_t>(cfg.num_samples), kBlock,
                  [&](std::size_t, std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      Rng r = Rng::stream(code_base, kTagCode, i);
      ds.codes[i] = sample_code(cfg, r);
    }
  });

  const Eigen::MatrixXd clean = ds.dictionary.matrix * ds.codes_matrix();
  if (cfg.snr_db) {
    auto [noisy, z] = add_noise(clean, *cfg.snr_db, master);
    ds.observations = std::move(noisy);
    // Store the noise as observed-minus-clean so the reconstruction identity
    // holds bit-exactly under the same matrix-product evaluation.
    ds.noise = ds.observations - clean;
    (void)z;
    ds.noise_snr_db = cfg.snr_db;
  } else {
    ds.observations = clean;
    ds.noise = Eigen::MatrixXd::Zero(clean.rows(), clean.cols());
  }
  return ds;
}

}  // namespace gsae
