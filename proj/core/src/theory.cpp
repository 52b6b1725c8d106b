#include "gsae/theory.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "gsae/errors.hpp"
#include "gsae/parallel.hpp"
#include "gsae/rng.hpp"

namespace gsae {

namespace {

constexpr int kBlock = 64;
constexpr std::uint64_t kTagMcSample = 11;

double median_of(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const std::size_t mid = v.size() / 2;
  if (v.size() % 2 == 1) return v[mid];
  return 0.5 * (v[mid - 1] + v[mid]);
}

void check_same_shape(const GroupedDictionary& dict,
                      const GroupedDictionary& dict_star) {
  dict.validate();
  dict_star.validate();
  if (dict.rows() != dict_star.rows() || dict.cols() != dict_star.cols() ||
      !(dict.structure == dict_star.structure)) {
    throw DimensionError("dictionary pair must share shape and grouping");
  }
}

}  // namespace

double ModelBounds::p_g() const {
  return static_cast<double>(gamma) / static_cast<double>(structure.num_groups);
}

void ModelBounds::validate() const {
  structure.validate();
  if (!(b_min > 0.0) || !(b_min <= b_max)) {
    throw ConfigError("need 0 < b_min <= b_max");
  }
  if (delta < 0.0 || delta > 1.0) throw ConfigError("delta must lie in [0, 1]");
  if (zeta < 0.0) throw ConfigError("zeta must be nonnegative");
  if (mu_b < 0.0 || mu_b > 1.0) throw ConfigError("mu_b must lie in [0, 1]");
  if (gamma < 0 || gamma > structure.num_groups) {
    throw ConfigError("gamma must lie in [0, num_groups]");
  }
}

ModelBounds measure_bounds(const GroupedDictionary& dict,
                           const GroupedDictionary& dict_star, int gamma,
                           double b_min, double b_max) {
  check_same_shape(dict, dict_star);
  ModelBounds b;
  b.structure = dict.structure;
  b.gamma = gamma;
  b.b_min = b_min;
  b.b_max = b_max;
  for (int g = 0; g < b.structure.num_groups; ++g) {
    b.delta = std::max(b.delta, (dict.block(g) - dict_star.block(g)).norm());
    b.zeta = std::max(b.zeta,
                      (dict.block(g).transpose() * dict_star.block(g)).norm());
  }
  b.mu_b = b.structure.num_groups >= 2 ? block_coherence(dict_star) : 0.0;
  b.validate();
  return b;
}

double group_norm_lower_bound(const ModelBounds& b) {
  b.validate();
  return b.b_min * (1.0 - b.delta);
}

double cross_term_upper_bound(const ModelBounds& b) {
  b.validate();
  return static_cast<double>(b.gamma) * b.b_max * (b.mu_b + b.delta);
}

std::optional<std::pair<double, double>> lambda_range(const ModelBounds& b) {
  const double cross = cross_term_upper_bound(b);
  const double upper = group_norm_lower_bound(b) - cross;
  if (cross <= upper) return std::make_pair(cross, upper);
  return std::nullopt;
}

SupportBoundReport verify_support_bounds(const GroupedDictionary& dict,
                                         const Dataset& dataset) {
  check_same_shape(dict, dataset.dictionary);
  if (dataset.codes.empty()) {
    throw ConfigError("dataset carries no ground-truth codes");
  }
  if (dataset.noise_snr_db || dataset.noise.squaredNorm() != 0.0) {
    throw ConfigError("support bounds are stated for noiseless data");
  }
  if (dataset.observations.cols() !=
      static_cast<Eigen::Index>(dataset.codes.size())) {
    throw DimensionError("dataset observations and codes disagree");
  }

  const GroupStructure& gs = dict.structure;
  const Eigen::Index n_samples = dataset.observations.cols();

  SupportBoundReport rep;
  int gamma = 0;
  rep.b_min_hat = std::numeric_limits<double>::infinity();
  rep.b_max_hat = 0.0;
  for (const GroupSparseCode& code : dataset.codes) {
    gamma = std::max(gamma, static_cast<int>(code.support.size()));
    for (const int g : code.support) {
      const double norm =
          code.values.segment(gs.first_column(g), gs.group_size).norm();
      rep.b_min_hat = std::min(rep.b_min_hat, norm);
      rep.b_max_hat = std::max(rep.b_max_hat, norm);
    }
  }
  if (!(rep.b_min_hat > 0.0) || !std::isfinite(rep.b_min_hat)) {
    throw NumericError("active groups must have positive code norms");
  }

  const ModelBounds bounds = measure_bounds(dict, dataset.dictionary, gamma,
                                            rep.b_min_hat, rep.b_max_hat);
  rep.delta_hat = bounds.delta;
  rep.mu_b_hat = bounds.mu_b;
  rep.inactive_ceiling = cross_term_upper_bound(bounds);
  rep.active_floor = group_norm_lower_bound(bounds) - rep.inactive_ceiling;

  struct Partial {
    long active_checks = 0, inactive_checks = 0;
    long active_violations = 0, inactive_violations = 0, triangle_violations = 0;
    double min_active = std::numeric_limits<double>::infinity();
    double min_inactive = std::numeric_limits<double>::infinity();
  };
  const std::size_t blocks =
      num_blocks(static_cast<std::size_t>(n_samples), kBlock);
  std::vector<Partial> partials(blocks);

  parallel_blocks(static_cast<std::size_t>(n_samples), kBlock,
                  [&](std::size_t block, std::size_t begin, std::size_t end) {
    Partial& p = partials[block];
    Eigen::MatrixXd contributions(dict.rows(), gs.num_groups);
    for (std::size_t ii = begin; ii < end; ++ii) {
      const auto i = static_cast<Eigen::Index>(ii);
      const GroupSparseCode& code = dataset.codes[ii];
      const Eigen::VectorXd y = dataset.observations.col(i);
      const Eigen::VectorXd u = dict.matrix.transpose() * y;
      for (const int h : code.support) {
        contributions.col(h).noalias() =
            dataset.dictionary.block(h) *
            code.values.segment(gs.first_column(h), gs.group_size);
      }
      std::size_t s_idx = 0;
      for (int g = 0; g < gs.num_groups; ++g) {
        const double norm = u.segment(gs.first_column(g), gs.group_size).norm();
        const bool active =
            s_idx < code.support.size() && code.support[s_idx] == g;
        if (active) {
          ++s_idx;
          ++p.active_checks;
          const double margin = norm - rep.active_floor;
          p.min_active = std::min(p.min_active, margin);
          // tolerance guards exact-equality cases (orthonormal dict at
          // delta = 0), where the margin is float dust around zero
          if (margin < -1e-9 * std::max(1.0, rep.active_floor)) {
            ++p.active_violations;
          }
        } else {
          ++p.inactive_checks;
          const double margin = rep.inactive_ceiling - norm;
          p.min_inactive = std::min(p.min_inactive, margin);
          if (margin < -1e-9 * std::max(1.0, rep.inactive_ceiling)) {
            ++p.inactive_violations;
          }
          double triangle = 0.0;
          for (const int h : code.support) {
            triangle += (dict.block(g).transpose() * contributions.col(h)).norm();
          }
          if (norm > triangle + 1e-9 * std::max(1.0, triangle)) {
            ++p.triangle_violations;
          }
        }
      }
    }
  });

  rep.min_active_margin = std::numeric_limits<double>::infinity();
  rep.min_inactive_margin = std::numeric_limits<double>::infinity();
  for (const Partial& p : partials) {
    rep.active_checks += p.active_checks;
    rep.inactive_checks += p.inactive_checks;
    rep.active_violations += p.active_violations;
    rep.inactive_violations += p.inactive_violations;
    rep.triangle_violations += p.triangle_violations;
    rep.min_active_margin = std::min(rep.min_active_margin, p.min_active);
    rep.min_inactive_margin = std::min(rep.min_inactive_margin, p.min_inactive);
  }
  return rep;
}

AlignmentReport expected_gradient_mc(const GroupedDictionary& dict,
                                     const GroupedDictionary& dict_star,
                                     const SynthConfig& cfg, double lambda,
                                     long num_mc) {
  check_same_shape(dict, dict_star);
  cfg.validate();
  if (cfg.signal_dim != dict.rows() || !(cfg.structure == dict.structure)) {
    throw DimensionError("synthesis config does not match the dictionaries");
  }
  if (num_mc < 1) throw ConfigError("num_mc must be at least 1");
  if (lambda < 0.0) throw ConfigError("lambda must be nonnegative");

  const GroupStructure& gs = dict.structure;
  const Eigen::Index n = dict.rows();
  const Eigen::Index m = dict.cols();

  struct Partial {
    Eigen::MatrixXd grad_sum;   // n x m
    Eigen::VectorXd inner_sum;  // m
    Eigen::VectorXd inner_sq;   // m
    Eigen::VectorXd tau_sum;    // num_groups
    Eigen::VectorXd tau_sq;     // num_groups
    Eigen::VectorXd active;     // num_groups
  };
  const std::size_t blocks =
      num_blocks(static_cast<std::size_t>(num_mc), kBlock);
  std::vector<Partial> partials(blocks);

  const Eigen::MatrixXd diff = dict.matrix - dict_star.matrix;

  parallel_blocks(static_cast<std::size_t>(num_mc), kBlock,
                  [&](std::size_t block, std::size_t begin, std::size_t end) {
    Partial& p = partials[block];
    p.grad_sum = Eigen::MatrixXd::Zero(n, m);
    p.inner_sum = Eigen::VectorXd::Zero(m);
    p.inner_sq = Eigen::VectorXd::Zero(m);
    p.tau_sum = Eigen::VectorXd::Zero(gs.num_groups);
    p.tau_sq = Eigen::VectorXd::Zero(gs.num_groups);
    p.active = Eigen::VectorXd::Zero(gs.num_groups);
    Eigen::VectorXd y(n), u(m), r(n);
    for (std::size_t s = begin; s < end; ++s) {
      Rng rng = Rng::stream(cfg.seed, kTagMcSample, s);
      const GroupSparseCode code = sample_code(cfg, rng);
      y.noalias() = dict_star.matrix * code.values;
      if (cfg.snr_db) {
        const double energy = y.squaredNorm();
        const double sigma =
            std::sqrt(energy / (static_cast<double>(n) *
                                std::pow(10.0, *cfg.snr_db / 10.0)));
        for (Eigen::Index i = 0; i < n; ++i) y(i) += sigma * rng.normal();
      }
      u.noalias() = dict.matrix.transpose() * y;
      r = y;
      for (int g = 0; g < gs.num_groups; ++g) {
        const double norm = u.segment(gs.first_column(g), gs.group_size).norm();
        if (norm > lambda && norm > 0.0) {
          const double tau = 1.0 - lambda / norm;
          p.tau_sum(g) += tau;
          p.tau_sq(g) += tau * tau;
          p.active(g) += 1.0;
          r.noalias() -= tau * (dict.block(g) *
                                u.segment(gs.first_column(g), gs.group_size));
        }
      }
      // Rebuild each active group's tau for the gradient pass (r is final).
      for (int g = 0; g < gs.num_groups; ++g) {
        const double norm = u.segment(gs.first_column(g), gs.group_size).norm();
        if (!(norm > lambda) || norm == 0.0) continue;
        const double tau = 1.0 - lambda / norm;
        for (int c = 0; c < gs.group_size; ++c) {
          const Eigen::Index col = gs.first_column(g) + c;
          const double ya = y.dot(dict.matrix.col(col));
          const double ra = r.dot(dict.matrix.col(col));
          p.grad_sum.col(col).noalias() -= tau * (ya * r + ra * y);
          const double inner =
              -tau * (ya * r.dot(diff.col(col)) + ra * y.dot(diff.col(col)));
          p.inner_sum(col) += inner;
          p.inner_sq(col) += inner * inner;
        }
      }
    }
  });

  Eigen::MatrixXd grad_sum = Eigen::MatrixXd::Zero(n, m);
  Eigen::VectorXd inner_sum = Eigen::VectorXd::Zero(m);
  Eigen::VectorXd inner_sq = Eigen::VectorXd::Zero(m);
  Eigen::VectorXd tau_sum = Eigen::VectorXd::Zero(gs.num_groups);
  Eigen::VectorXd tau_sq = Eigen::VectorXd::Zero(gs.num_groups);
  Eigen::VectorXd active = Eigen::VectorXd::Zero(gs.num_groups);
  for (const Partial& p : partials) {
    grad_sum += p.grad_sum;
    inner_sum += p.inner_sum;
    inner_sq += p.inner_sq;
    tau_sum += p.tau_sum;
    tau_sq += p.tau_sq;
    active += p.active;
  }

  AlignmentReport rep;
  rep.num_mc = num_mc;
  const double mc = static_cast<double>(num_mc);
  rep.inner = inner_sum / mc;
  rep.inner_se = Eigen::VectorXd::Zero(m);
  if (num_mc > 1) {
    for (Eigen::Index i = 0; i < m; ++i) {
      const double var =
          (inner_sq(i) - inner_sum(i) * inner_sum(i) / mc) / (mc - 1.0);
      rep.inner_se(i) = std::sqrt(std::max(var, 0.0) / mc);
    }
  }
  rep.tau_bar = Eigen::VectorXd::Zero(gs.num_groups);
  rep.tau_sd = Eigen::VectorXd::Zero(gs.num_groups);
  for (int g = 0; g < gs.num_groups; ++g) {
    if (active(g) > 0.0) {
      rep.tau_bar(g) = tau_sum(g) / active(g);
      if (active(g) > 1.0) {
        const double var = (tau_sq(g) - tau_sum(g) * tau_sum(g) / active(g)) /
                           (active(g) - 1.0);
        rep.tau_sd(g) = std::sqrt(std::max(var, 0.0));
      }
    }
  }
  rep.active_count = active;

  rep.alpha = Eigen::VectorXd::Zero(m);
  rep.omega = Eigen::VectorXd::Zero(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    rep.alpha(i) = dict_star.matrix.col(i).dot(dict.matrix.col(i));
    const int g = static_cast<int>(i) / gs.group_size;
    double w = 0.0;
    for (int c = 0; c < gs.group_size; ++c) {
      const Eigen::Index j = gs.first_column(g) + c;
      if (j == i) continue;
      w = std::max(w, std::abs(dict_star.matrix.col(j).dot(dict.matrix.col(i))));
    }
    rep.omega(i) = w;
  }

  const ModelBounds bounds =
      measure_bounds(dict, dict_star, cfg.active_groups, cfg.scale_low,
                     std::max(cfg.scale_high, cfg.scale_low + 1e-300));
  const auto range = lambda_range(bounds);
  rep.lambda_in_range =
      range.has_value() && lambda >= range->first && lambda <= range->second;
  const double gam = static_cast<double>(cfg.active_groups);
  const double num_groups = static_cast<double>(gs.num_groups);
  rep.epsilon_unit = (bounds.mu_b + bounds.delta) * (bounds.mu_b + bounds.delta) *
                     std::pow(gam, 5) / std::pow(num_groups, 3);

  const double p_g = bounds.p_g();
  const double d = static_cast<double>(gs.group_size);
  rep.alignment_rhs = Eigen::VectorXd::Zero(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const int g = static_cast<int>(i) / gs.group_size;
    const double tau = rep.tau_bar(g);
    const double kappa = tau * (2.0 - tau) * p_g * rep.alpha(i);
    if (!(kappa > 0.0)) {
      rep.alignment_rhs(i) = std::numeric_limits<double>::quiet_NaN();
      continue;
    }
    const double group_err = (dict.block(g) - dict_star.block(g)).norm();
    const double col_err = diff.col(i).squaredNorm();
    const double grad_norm_sq = (grad_sum.col(i) / mc).squaredNorm();
    const double v_bound = tau * (2.0 - tau) * p_g *
                           (rep.omega(i) * std::sqrt(d * d + 1.0) + bounds.delta) *
                           group_err;
    rep.alignment_rhs(i) = 0.5 * (kappa * col_err + grad_norm_sq / kappa -
                                v_bound * v_bound / kappa - rep.epsilon_unit);
  }
  return rep;
}

GeometryStats measure_geometry(const GroupedDictionary& dict,
                               const GroupedDictionary& dict_star,
                               const Eigen::MatrixXd& observations,
                               double lambda) {
  check_same_shape(dict, dict_star);
  if (observations.rows() != dict.rows()) {
    throw DimensionError("observations do not match the dictionary rows");
  }
  if (observations.cols() == 0) {
    throw ConfigError("geometry needs at least one observation");
  }
  GeometryStats geo;
  geo.signal_dim = static_cast<int>(dict.rows());
  geo.alpha_min = std::numeric_limits<double>::infinity();
  geo.alpha_max = -std::numeric_limits<double>::infinity();
  const GroupStructure& gs = dict.structure;
  for (Eigen::Index i = 0; i < dict.cols(); ++i) {
    const double alpha = dict_star.matrix.col(i).dot(dict.matrix.col(i));
    geo.alpha_min = std::min(geo.alpha_min, alpha);
    geo.alpha_max = std::max(geo.alpha_max, alpha);
    const int g = static_cast<int>(i) / gs.group_size;
    for (int c = 0; c < gs.group_size; ++c) {
      const Eigen::Index j = gs.first_column(g) + c;
      if (j == i) continue;
      geo.omega_max =
          std::max(geo.omega_max,
                   std::abs(dict_star.matrix.col(j).dot(dict.matrix.col(i))));
    }
  }
  const Eigen::MatrixXd u = dict.matrix.transpose() * observations;
  double tau_total = 0.0;
  long activations = 0;
  for (Eigen::Index s = 0; s < u.cols(); ++s) {
    for (int g = 0; g < gs.num_groups; ++g) {
      const double norm =
          u.col(s).segment(gs.first_column(g), gs.group_size).norm();
      if (norm > lambda && norm > 0.0) {
        tau_total += 1.0 - lambda / norm;
        ++activations;
      }
    }
  }
  geo.tau_bar = activations > 0 ? tau_total / static_cast<double>(activations)
                                : 0.0;
  return geo;
}

ContractionReport contraction_trace(const TrainHistory& history,
                                    const ModelBounds& b, double eta,
                                    const GeometryStats& geometry) {
  b.validate();
  if (eta < 0.0) throw ConfigError("eta must be nonnegative");
  if (history.records.size() < 2) {
    throw ConfigError("contraction needs at least two epochs of history");
  }
  const int num_groups = b.structure.num_groups;
  for (const EpochRecord& rec : history.records) {
    if (rec.group_errors.size() != num_groups) {
      throw ConfigError("history lacks per-group errors");
    }
  }

  ContractionReport rep;
  const auto epochs = static_cast<Eigen::Index>(history.records.size()) - 1;
  rep.ratios.resize(epochs, num_groups);
  const double d = static_cast<double>(b.structure.group_size);
  const double gam = static_cast<double>(b.gamma);
  const double big_gamma = static_cast<double>(num_groups);
  rep.additive_unit = d * (b.mu_b + b.delta) * (b.mu_b + b.delta) *
                      std::pow(gam, 4) / (big_gamma * big_gamma);
  rep.additive_log = d * std::pow(std::log(static_cast<double>(
                             std::max(geometry.signal_dim, 2))), 2) /
                     (big_gamma * big_gamma);

  for (Eigen::Index k = 0; k < epochs; ++k) {
    const Eigen::VectorXd& prev =
        history.records[static_cast<std::size_t>(k)].group_errors;
    const Eigen::VectorXd& next =
        history.records[static_cast<std::size_t>(k) + 1].group_errors;
    std::vector<double> adjusted;
    adjusted.reserve(static_cast<std::size_t>(num_groups));
    for (int g = 0; g < num_groups; ++g) {
      const double den = prev(g) * prev(g);
      const double num = next(g) * next(g);
      double ratio;
      if (den == 0.0) {
        ratio = num == 0.0 ? 1.0 : std::numeric_limits<double>::infinity();
      } else {
        ratio = num / den;
      }
      rep.ratios(k, g) = ratio;
      adjusted.push_back(den == 0.0 ? ratio
                                    : (num - rep.additive_unit) / den);
    }
    if (median_of(adjusted) > 1.0) {
      rep.flagged_epochs.push_back(static_cast<int>(k));
    }
  }
  rep.per_group_median.resize(num_groups);
  for (int g = 0; g < num_groups; ++g) {
    std::vector<double> col(static_cast<std::size_t>(epochs));
    for (Eigen::Index k = 0; k < epochs; ++k) {
      col[static_cast<std::size_t>(k)] = rep.ratios(k, g);
    }
    rep.per_group_median(g) = median_of(std::move(col));
  }

  const double tau = geometry.tau_bar;
  const double p_g = b.p_g();
  const double kappa_max = tau * (2.0 - tau) * p_g * geometry.alpha_max;
  rep.eta_max = kappa_max > 0.0 ? 1.0 / kappa_max
                                : std::numeric_limits<double>::infinity();
  if (!(geometry.alpha_min > 0.0)) {
    rep.alpha_min_nonpositive = true;
    rep.rho = std::numeric_limits<double>::quiet_NaN();
  } else {
    const double w = geometry.omega_max * std::sqrt(d * d + 1.0) + b.delta;
    rep.rho = eta * tau * (2.0 - tau) * p_g *
              (geometry.alpha_min - 2.0 * d * w * w / geometry.alpha_min);
  }
  const double n = static_cast<double>(geometry.signal_dim);
  rep.precondition_lhs = b.zeta * b.zeta;
  if (tau > 0.0) {
    rep.precondition_rhs =
        (1.0 / (tau * tau)) * (3.0 * (2.0 - tau) * (tau - 2.0 / 3.0) * n +
                               (1.0 - tau) * (2.0 - tau) * b.delta * b.delta);
  } else {
    rep.precondition_rhs = std::numeric_limits<double>::quiet_NaN();
  }
  rep.precondition_holds = rep.precondition_lhs <= rep.precondition_rhs;
  return rep;
}

}  // namespace gsae
