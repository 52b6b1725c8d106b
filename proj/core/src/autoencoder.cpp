#include "gsae/autoencoder.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "gsae/errors.hpp"
#include "gsae/parallel.hpp"

namespace gsae {

namespace {

constexpr int kTile = 64;
constexpr double kSupportTol = 1e-12;

double resolve_encoder_step(const AutoencoderState& ae) {
  return ae.ista_step ? *ae.ista_step : default_ista_step(ae.dict);
}

// Support of a column under the "any nonzero entry activates the group" rule
// shared by all shrinkage kinds (the group prox zeroes whole groups anyway).
bool support_matches(const Eigen::Ref<const Eigen::VectorXd>& x,
                     const GroupStructure& gs, const std::vector<int>& truth) {
  std::size_t hits = 0;
  for (int g = 0; g < gs.num_groups; ++g) {
    const bool active =
        x.segment(gs.first_column(g), gs.group_size).lpNorm<Eigen::Infinity>() >
        kSupportTol;
    if (active) {
      if (hits == truth.size() || truth[hits] != g) return false;
      ++hits;
    }
  }
  return hits == truth.size();
}

struct TilePartial {
  Eigen::MatrixXd gradient;
  double loss = 0.0;
  long matches = 0;
};

// Exact gradient of the shallow map on a tile of columns.
void shallow_tile(const AutoencoderState& ae, const Eigen::MatrixXd& yt,
                  Eigen::MatrixXd& codes, TilePartial& out) {
  const auto& a = ae.dict.matrix;
  const Eigen::Index width = yt.cols();
  Eigen::MatrixXd u(a.cols(), width);
  u.noalias() = a.transpose() * yt;
  Eigen::MatrixXd x = u;
  for (Eigen::Index j = 0; j < width; ++j) {
    x.col(j) = apply_prox(x.col(j), ae.lambda, ae.prox, ae.dict.structure);
  }
  Eigen::MatrixXd r(yt.rows(), width);
  r.noalias() = yt - a * x;
  Eigen::MatrixXd w(a.cols(), width);
  w.noalias() = a.transpose() * r;
  Eigen::MatrixXd v(a.cols(), width);
  for (Eigen::Index j = 0; j < width; ++j) {
    v.col(j) = prox_jacobian_apply(u.col(j), w.col(j), ae.lambda, ae.prox,
                                   ae.dict.structure);
  }
  out.gradient.noalias() = -(r * x.transpose() + yt * v.transpose());
  out.loss = 0.5 * r.squaredNorm();
  codes = std::move(x);
}

// Reverse accumulation through T proximal-gradient steps on a tile.
void unrolled_tile(const AutoencoderState& ae, const Eigen::MatrixXd& yt,
                   double step, Eigen::MatrixXd& codes, TilePartial& out) {
  const auto& a = ae.dict.matrix;
  const Eigen::Index m = a.cols();
  const Eigen::Index width = yt.cols();
  const double shrink = step * ae.lambda;
  const int t_steps = ae.unroll;

  std::vector<Eigen::MatrixXd> xs(static_cast<std::size_t>(t_steps) + 1);
  std::vector<Eigen::MatrixXd> us(static_cast<std::size_t>(t_steps));
  xs[0] = Eigen::MatrixXd::Zero(m, width);
  for (int t = 0; t < t_steps; ++t) {
    Eigen::MatrixXd u = xs[static_cast<std::size_t>(t)];
    u.noalias() +=
        step * (a.transpose() * (yt - a * xs[static_cast<std::size_t>(t)]));
    Eigen::MatrixXd x = u;
    for (Eigen::Index j = 0; j < width; ++j) {
      x.col(j) = apply_prox(x.col(j), shrink, ae.prox, ae.dict.structure);
    }
    us[static_cast<std::size_t>(t)] = std::move(u);
    xs[static_cast<std::size_t>(t) + 1] = std::move(x);
  }

  const Eigen::MatrixXd& xT = xs[static_cast<std::size_t>(t_steps)];
  Eigen::MatrixXd r(yt.rows(), width);
  r.noalias() = yt - a * xT;
  out.loss = 0.5 * r.squaredNorm();
  out.gradient.noalias() = -(r * xT.transpose());

  Eigen::MatrixXd gx(m, width);
  gx.noalias() = -(a.transpose() * r);
  Eigen::MatrixXd gu(m, width);
  Eigen::MatrixXd agu(yt.rows(), width);
  Eigen::MatrixXd e(yt.rows(), width);
  for (int t = t_steps - 1; t >= 0; --t) {
    const Eigen::MatrixXd& ut = us[static_cast<std::size_t>(t)];
    const Eigen::MatrixXd& xt = xs[static_cast<std::size_t>(t)];
    for (Eigen::Index j = 0; j < width; ++j) {
      gu.col(j) = prox_jacobian_apply(ut.col(j), gx.col(j), shrink, ae.prox,
                                      ae.dict.structure);
    }
    e.noalias() = yt - a * xt;
    agu.noalias() = a * gu;
    out.gradient.noalias() += step * (e * gu.transpose());
    out.gradient.noalias() -= step * (agu * xt.transpose());
    gx = gu;
    gx.noalias() -= step * (a.transpose() * agu);
  }
  codes = xT;
}

}  // namespace

void AutoencoderState::validate() const {
  dict.validate();
  if (!dict.matrix.allFinite()) {
    throw NumericError("autoencoder weights are not finite");
  }
  if (lambda < 0.0) throw ConfigError("lambda must be nonnegative");
  if (unroll < 1) throw ConfigError("unroll depth must be at least 1");
  if (ista_step && !(*ista_step > 0.0)) {
    throw ConfigError("ista_step must be positive when given");
  }
}

void TrainConfig::validate() const {
  if (!(learning_rate >= 0.0)) throw ConfigError("learning_rate must be nonnegative");
  if (epochs < 1) throw ConfigError("epochs must be at least 1");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw ConfigError("adam betas must lie in [0, 1)");
  }
  if (!(eps_adam > 0.0)) throw ConfigError("eps_adam must be positive");
  if (!(divergence_guard > 0.0)) {
    throw ConfigError("divergence_guard must be positive");
  }
}

GroupSparseCode encode(const AutoencoderState& ae, const Eigen::VectorXd& y) {
  ae.validate();
  if (y.size() != ae.dict.rows()) {
    throw DimensionError("observation length does not match the dictionary");
  }
  if (ae.unroll == 1) {
    GroupSparseCode code;
    code.values = apply_prox(ae.dict.matrix.transpose() * y, ae.lambda, ae.prox,
                             ae.dict.structure);
    code.support = group_support(code.values, ae.dict.structure, kSupportTol);
    return code;
  }
  IstaConfig cfg;
  cfg.step = resolve_encoder_step(ae);
  cfg.iterations = ae.unroll;
  cfg.lambda = ae.lambda;
  if (ae.prox == ProxKind::GroupSoftThreshold) {
    return group_ista(y, ae.dict, cfg);
  }
  const Eigen::MatrixXd x = batch_ista(y, ae.dict, cfg, ae.prox);
  GroupSparseCode code;
  code.values = x.col(0);
  code.support = group_support(code.values, ae.dict.structure, kSupportTol);
  return code;
}

Eigen::VectorXd decode(const AutoencoderState& ae, const Eigen::VectorXd& x) {
  ae.validate();
  if (x.size() != ae.dict.cols()) {
    throw DimensionError("code length does not match the dictionary");
  }
  return ae.dict.matrix * x;
}

Eigen::MatrixXd batch_encode(const AutoencoderState& ae, const Eigen::MatrixXd& y) {
  ae.validate();
  if (y.rows() != ae.dict.rows()) {
    throw DimensionError("observation rows do not match the dictionary");
  }
  if (ae.unroll == 1) {
    Eigen::MatrixXd x(ae.dict.cols(), y.cols());
    parallel_blocks(static_cast<std::size_t>(y.cols()), kTile,
                    [&](std::size_t, std::size_t begin, std::size_t end) {
      const auto lo = static_cast<Eigen::Index>(begin);
      const auto width = static_cast<Eigen::Index>(end - begin);
      Eigen::MatrixXd u(ae.dict.cols(), width);
      u.noalias() = ae.dict.matrix.transpose() * y.middleCols(lo, width);
      for (Eigen::Index j = 0; j < width; ++j) {
        u.col(j) = apply_prox(u.col(j), ae.lambda, ae.prox, ae.dict.structure);
      }
      x.middleCols(lo, width) = u;
    });
    return x;
  }
  IstaConfig cfg;
  cfg.step = resolve_encoder_step(ae);
  cfg.iterations = ae.unroll;
  cfg.lambda = ae.lambda;
  return batch_ista(y, ae.dict, cfg, ae.prox);
}

double loss(const AutoencoderState& ae, const Eigen::MatrixXd& y) {
  if (y.cols() == 0) throw ConfigError("loss needs at least one sample");
  const Eigen::MatrixXd x = batch_encode(ae, y);
  return 0.5 * (y - ae.dict.matrix * x).squaredNorm() /
         static_cast<double>(y.cols());
}

Eigen::MatrixXd gradient_analytic(const AutoencoderState& ae,
                                  const Eigen::VectorXd& y) {
  ae.validate();
  if (ae.unroll != 1) {
    throw ConfigError("the closed-form gradient is defined for unroll == 1");
  }
  if (y.size() != ae.dict.rows()) {
    throw DimensionError("observation length does not match the dictionary");
  }
  TilePartial part;
  Eigen::MatrixXd codes;
  shallow_tile(ae, y, codes, part);
  return part.gradient;
}

Eigen::MatrixXd gradient_approx(const AutoencoderState& ae,
                                const Eigen::VectorXd& y) {
  ae.validate();
  if (ae.unroll != 1 || ae.prox != ProxKind::GroupSoftThreshold) {
    throw ConfigError(
        "the scaling-substitution gradient is defined for the shallow group "
        "encoder");
  }
  if (y.size() != ae.dict.rows()) {
    throw DimensionError("observation length does not match the dictionary");
  }
  const auto& a = ae.dict.matrix;
  const GroupStructure& gs = ae.dict.structure;
  const Eigen::VectorXd u = a.transpose() * y;
  const Eigen::VectorXd norms = group_norms(u, gs);

  // r = y - sum_{g active} tau_g A_g A_g^T y.
  Eigen::VectorXd r = y;
  std::vector<double> tau(static_cast<std::size_t>(gs.num_groups), 0.0);
  for (int g = 0; g < gs.num_groups; ++g) {
    if (norms(g) > ae.lambda && norms(g) > 0.0) {
      tau[static_cast<std::size_t>(g)] = 1.0 - ae.lambda / norms(g);
      r.noalias() -= tau[static_cast<std::size_t>(g)] *
                     (ae.dict.block(g) *
                      u.segment(gs.first_column(g), gs.group_size));
    }
  }

  Eigen::MatrixXd grad = Eigen::MatrixXd::Zero(a.rows(), a.cols());
  for (int g = 0; g < gs.num_groups; ++g) {
    const double tg = tau[static_cast<std::size_t>(g)];
    if (tg == 0.0) continue;
    const auto ag = ae.dict.block(g);
    const Eigen::RowVectorXd ya = y.transpose() * ag;
    const Eigen::RowVectorXd ra = r.transpose() * ag;
    grad.middleCols(gs.first_column(g), gs.group_size) =
        -tg * (r * ya + y * ra);
  }
  return grad;
}

BatchEval batch_gradient(const AutoencoderState& ae, const Eigen::MatrixXd& y,
                         const std::vector<std::vector<int>>* truth_supports) {
  ae.validate();
  if (y.rows() != ae.dict.rows()) {
    throw DimensionError("observation rows do not match the dictionary");
  }
  if (y.cols() == 0) throw ConfigError("gradient needs at least one sample");
  if (truth_supports &&
      truth_supports->size() != static_cast<std::size_t>(y.cols())) {
    throw DimensionError("truth supports do not match the sample count");
  }
  const std::size_t blocks =
      num_blocks(static_cast<std::size_t>(y.cols()), kTile);
  std::vector<TilePartial> partials(blocks);
  const double step = ae.unroll > 1 ? resolve_encoder_step(ae) : 0.0;

  parallel_blocks(static_cast<std::size_t>(y.cols()), kTile,
                  [&](std::size_t block, std::size_t begin, std::size_t end) {
    const auto lo = static_cast<Eigen::Index>(begin);
    const auto width = static_cast<Eigen::Index>(end - begin);
    const Eigen::MatrixXd yt = y.middleCols(lo, width);
    Eigen::MatrixXd codes;
    TilePartial& part = partials[block];
    if (ae.unroll == 1) {
      shallow_tile(ae, yt, codes, part);
    } else {
      unrolled_tile(ae, yt, step, codes, part);
    }
    if (truth_supports) {
      for (Eigen::Index j = 0; j < width; ++j) {
        part.matches += support_matches(
            codes.col(j), ae.dict.structure,
            (*truth_supports)[begin + static_cast<std::size_t>(j)]);
      }
    }
  });

  BatchEval eval;
  eval.gradient = Eigen::MatrixXd::Zero(ae.dict.rows(), ae.dict.cols());
  double total_loss = 0.0;
  long matches = 0;
  for (const TilePartial& part : partials) {
    eval.gradient += part.gradient;
    total_loss += part.loss;
    matches += part.matches;
  }
  const double n = static_cast<double>(y.cols());
  eval.gradient /= n;
  eval.loss = total_loss / n;
  eval.support_rate = truth_supports
                          ? static_cast<double>(matches) / n
                          : std::numeric_limits<double>::quiet_NaN();
  return eval;
}

TrainHistory train(AutoencoderState& ae, const Eigen::MatrixXd& y,
                   const TrainConfig& cfg, const TruthRef& truth) {
  ae.validate();
  cfg.validate();
  if (truth.dictionary) {
    if (truth.dictionary->matrix.rows() != ae.dict.rows() ||
        truth.dictionary->matrix.cols() != ae.dict.cols()) {
      throw DimensionError("truth dictionary shape mismatch");
    }
  }

  Eigen::MatrixXd adam_m, adam_v;
  if (cfg.optimizer == Optimizer::Adam) {
    adam_m = Eigen::MatrixXd::Zero(ae.dict.rows(), ae.dict.cols());
    adam_v = Eigen::MatrixXd::Zero(ae.dict.rows(), ae.dict.cols());
  }

  TrainHistory history;
  history.records.reserve(static_cast<std::size_t>(cfg.epochs) + 1);
  for (int epoch = 0; epoch <= cfg.epochs; ++epoch) {
    const BatchEval eval = batch_gradient(ae, y, truth.supports);
    if (!(eval.loss <= cfg.divergence_guard)) {
      throw ConvergenceError("loss " + std::to_string(eval.loss) +
                             " exceeded the divergence guard at epoch " +
                             std::to_string(epoch));
    }
    EpochRecord rec;
    rec.epoch = epoch;
    rec.loss = eval.loss;
    rec.support_rate = eval.support_rate;
    if (truth.dictionary) {
      rec.dict_error =
          cfg.normalize_columns_for_metric
              ? normalized_dict_error(ae.dict.matrix, truth.dictionary->matrix)
              : (ae.dict.matrix - truth.dictionary->matrix).squaredNorm();
      rec.group_errors = per_group_errors(
          ae.dict.matrix, truth.dictionary->matrix, ae.dict.structure);
    } else {
      rec.dict_error = std::numeric_limits<double>::quiet_NaN();
    }
    history.records.push_back(std::move(rec));
    if (epoch == cfg.epochs) break;

    if (cfg.optimizer == Optimizer::PlainGd) {
      ae.dict.matrix.noalias() -= cfg.learning_rate * eval.gradient;
    } else {
      const double t = static_cast<double>(epoch) + 1.0;
      adam_m = cfg.beta1 * adam_m + (1.0 - cfg.beta1) * eval.gradient;
      adam_v = cfg.beta2 * adam_v +
               (1.0 - cfg.beta2) * eval.gradient.cwiseProduct(eval.gradient);
      const double mc = 1.0 - std::pow(cfg.beta1, t);
      const double vc = 1.0 - std::pow(cfg.beta2, t);
      ae.dict.matrix.array() -=
          cfg.learning_rate * (adam_m.array() / mc) /
          ((adam_v.array() / vc).sqrt() + cfg.eps_adam);
    }
    if (!ae.dict.matrix.allFinite()) {
      throw ConvergenceError("weights turned non-finite at epoch " +
                             std::to_string(epoch + 1));
    }
  }
  return history;
}

double normalized_dict_error(const Eigen::MatrixXd& a,
                             const Eigen::MatrixXd& a_star) {
  if (a.rows() != a_star.rows() || a.cols() != a_star.cols()) {
    throw DimensionError("dictionaries differ in shape");
  }
  double total = 0.0;
  for (Eigen::Index j = 0; j < a.cols(); ++j) {
    const double na = a.col(j).norm();
    const double ns = a_star.col(j).norm();
    if (na == 0.0 || ns == 0.0) {
      throw NumericError("cannot normalize a zero column (index " +
                         std::to_string(j) + ")");
    }
    total += (a.col(j) / na - a_star.col(j) / ns).squaredNorm();
  }
  return total;
}

Eigen::VectorXd per_group_errors(const Eigen::MatrixXd& a,
                                 const Eigen::MatrixXd& a_star,
                                 const GroupStructure& gs) {
  gs.validate();
  if (a.rows() != a_star.rows() || a.cols() != a_star.cols() ||
      a.cols() != gs.total_columns()) {
    throw DimensionError("dictionaries do not match the group structure");
  }
  Eigen::VectorXd errors(gs.num_groups);
  for (int g = 0; g < gs.num_groups; ++g) {
    errors(g) = (a.middleCols(gs.first_column(g), gs.group_size) -
                 a_star.middleCols(gs.first_column(g), gs.group_size))
                    .norm();
  }
  return errors;
}

double support_recovery_rate(const AutoencoderState& ae, const Dataset& dataset) {
  ae.validate();
  if (dataset.codes.empty()) {
    throw ConfigError("support recovery rate needs at least one sample");
  }
  if (dataset.observations.cols() !=
      static_cast<Eigen::Index>(dataset.codes.size())) {
    throw DimensionError("dataset observations and codes disagree");
  }
  const Eigen::MatrixXd x = batch_encode(ae, dataset.observations);
  long matches = 0;
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    matches += support_matches(x.col(j), ae.dict.structure,
                               dataset.codes[static_cast<std::size_t>(j)].support);
  }
  return static_cast<double>(matches) / static_cast<double>(x.cols());
}

}  // namespace gsae
