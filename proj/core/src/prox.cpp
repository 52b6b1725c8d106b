#include "gsae/prox.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>

#include "gsae/errors.hpp"
#include "gsae/parallel.hpp"

namespace gsae {

namespace {

constexpr int kTile = 64;

void group_prox_inplace(Eigen::Ref<Eigen::VectorXd> v, double lambda,
                        const GroupStructure& gs) {
  for (int g = 0; g < gs.num_groups; ++g) {
    auto seg = v.segment(gs.first_column(g), gs.group_size);
    const double norm = seg.norm();
    if (norm <= lambda || norm == 0.0) {
      seg.setZero();
    } else {
      seg *= (1.0 - lambda / norm);
    }
  }
}

void apply_prox_inplace(Eigen::Ref<Eigen::VectorXd> v, double lambda, ProxKind kind,
                        const GroupStructure& gs) {
  switch (kind) {
    case ProxKind::GroupSoftThreshold:
      group_prox_inplace(v, lambda, gs);
      return;
    case ProxKind::SoftThreshold:
      for (Eigen::Index i = 0; i < v.size(); ++i) {
        const double a = std::abs(v(i)) - lambda;
        v(i) = a > 0.0 ? (v(i) > 0.0 ? a : -a) : 0.0;
      }
      return;
    case ProxKind::Relu:
      for (Eigen::Index i = 0; i < v.size(); ++i) {
        v(i) = std::max(v(i) - lambda, 0.0);
      }
      return;
  }
  throw ConfigError("unknown prox kind");
}

double resolve_step(const IstaConfig& cfg, const GroupedDictionary& dict) {
  return cfg.step ? *cfg.step : default_ista_step(dict);
}

}  // namespace

std::string to_string(ProxKind kind) {
  switch (kind) {
    case ProxKind::GroupSoftThreshold: return "group";
    case ProxKind::SoftThreshold: return "sparse";
    case ProxKind::Relu: return "relu";
  }
  throw ConfigError("unknown prox kind");
}

ProxKind prox_kind_from_string(const std::string& name) {
  if (name == "group") return ProxKind::GroupSoftThreshold;
  if (name == "sparse") return ProxKind::SoftThreshold;
  if (name == "relu") return ProxKind::Relu;
  throw ConfigError("unknown prox kind '" + name +
                    "'; expected group, sparse, or relu");
}

void IstaConfig::validate() const {
  if (step && !(*step > 0.0)) throw ConfigError("ista step must be positive");
  if (iterations < 1) throw ConfigError("ista needs at least one iteration");
  if (lambda < 0.0) throw ConfigError("lambda must be nonnegative");
}

Eigen::VectorXd group_prox(const Eigen::VectorXd& v, double lambda,
                           const GroupStructure& gs) {
  gs.validate();
  if (lambda < 0.0) throw ConfigError("lambda must be nonnegative");
  if (v.size() != gs.total_columns()) {
    throw DimensionError("vector length does not match group structure");
  }
  Eigen::VectorXd out = v;
  group_prox_inplace(out, lambda, gs);
  return out;
}

Eigen::VectorXd soft_threshold(const Eigen::VectorXd& v, double lambda) {
  if (lambda < 0.0) throw ConfigError("lambda must be nonnegative");
  Eigen::VectorXd out = v;
  GroupStructure dummy;
  apply_prox_inplace(out, lambda, ProxKind::SoftThreshold, dummy);
  return out;
}

Eigen::VectorXd shifted_relu(const Eigen::VectorXd& v, double lambda) {
  if (lambda < 0.0) throw ConfigError("lambda must be nonnegative");
  Eigen::VectorXd out = v;
  GroupStructure dummy;
  apply_prox_inplace(out, lambda, ProxKind::Relu, dummy);
  return out;
}

Eigen::VectorXd apply_prox(const Eigen::VectorXd& v, double lambda, ProxKind kind,
                           const GroupStructure& gs) {
  if (kind == ProxKind::GroupSoftThreshold) return group_prox(v, lambda, gs);
  if (lambda < 0.0) throw ConfigError("lambda must be nonnegative");
  Eigen::VectorXd out = v;
  apply_prox_inplace(out, lambda, kind, gs);
  return out;
}

Eigen::VectorXd prox_jacobian_apply(const Eigen::VectorXd& u,
                                    const Eigen::VectorXd& w, double lambda,
                                    ProxKind kind, const GroupStructure& gs) {
  if (u.size() != w.size()) {
    throw DimensionError("pre-activation and direction differ in length");
  }
  if (lambda < 0.0) throw ConfigError("lambda must be nonnegative");
  Eigen::VectorXd out = Eigen::VectorXd::Zero(u.size());
  switch (kind) {
    case ProxKind::GroupSoftThreshold: {
      gs.validate();
      if (u.size() != gs.total_columns()) {
        throw DimensionError("vector length does not match group structure");
      }
      for (int g = 0; g < gs.num_groups; ++g) {
        const auto ug = u.segment(gs.first_column(g), gs.group_size);
        const auto wg = w.segment(gs.first_column(g), gs.group_size);
        const double norm = ug.norm();
        if (norm <= lambda || norm == 0.0) continue;
        out.segment(gs.first_column(g), gs.group_size) =
            (1.0 - lambda / norm) * wg +
            (lambda * ug.dot(wg) / (norm * norm * norm)) * ug;
      }
      return out;
    }
    case ProxKind::SoftThreshold:
      for (Eigen::Index i = 0; i < u.size(); ++i) {
        if (std::abs(u(i)) > lambda) out(i) = w(i);
      }
      return out;
    case ProxKind::Relu:
      for (Eigen::Index i = 0; i < u.size(); ++i) {
        if (u(i) > lambda) out(i) = w(i);
      }
      return out;
  }
  throw ConfigError("unknown prox kind");
}

double default_ista_step(const GroupedDictionary& dict) {
  dict.validate();
  // lambda_max(A^T A) = lambda_max(A A^T); use the smaller Gram matrix.
  const auto& a = dict.matrix;
  Eigen::MatrixXd gram;
  if (a.rows() <= a.cols()) {
    gram.noalias() = a * a.transpose();
  } else {
    gram.noalias() = a.transpose() * a;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram,
                                                    Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) {
    throw NumericError("eigendecomposition of the Gram matrix failed");
  }
  const double lmax = es.eigenvalues().maxCoeff();
  if (!(lmax > 0.0)) throw NumericError("dictionary has zero spectral norm");
  return 1.0 / lmax;
}

double group_objective(const Eigen::VectorXd& y, const GroupedDictionary& dict,
                       const Eigen::VectorXd& x, double lambda) {
  dict.validate();
  if (y.size() != dict.rows() || x.size() != dict.cols()) {
    throw DimensionError("objective operands do not match the dictionary");
  }
  const double fit = 0.5 * (y - dict.matrix * x).squaredNorm();
  return fit + lambda * group_norms(x, dict.structure).sum();
}

IstaResult group_ista_full(const Eigen::VectorXd& y, const GroupedDictionary& dict,
                           const IstaConfig& cfg, const Eigen::VectorXd& init) {
  cfg.validate();
  dict.validate();
  if (y.size() != dict.rows()) {
    throw DimensionError("observation length does not match the dictionary");
  }
  Eigen::VectorXd x;
  if (init.size() == 0) {
    x = Eigen::VectorXd::Zero(dict.cols());
  } else if (init.size() == dict.cols()) {
    x = init;
  } else {
    throw DimensionError("init length does not match the dictionary width");
  }

  IstaResult result;
  result.step = resolve_step(cfg, dict);
  const double shrink =
      cfg.scale_lambda_by_step ? result.step * cfg.lambda : cfg.lambda;
  result.objectives.reserve(static_cast<std::size_t>(cfg.iterations) + 1);
  result.objectives.push_back(group_objective(y, dict, x, cfg.lambda));
  Eigen::VectorXd residual(y.size());
  for (int t = 0; t < cfg.iterations; ++t) {
    residual.noalias() = y - dict.matrix * x;
    x.noalias() += result.step * (dict.matrix.transpose() * residual);
    group_prox_inplace(x, shrink, dict.structure);
    result.objectives.push_back(group_objective(y, dict, x, cfg.lambda));
  }
  result.code.values = std::move(x);
  result.code.support = group_support(result.code.values, dict.structure, 1e-12);
  return result;
}

GroupSparseCode group_ista(const Eigen::VectorXd& y, const GroupedDictionary& dict,
                           const IstaConfig& cfg, const Eigen::VectorXd& init) {
  return group_ista_full(y, dict, cfg, init).code;
}

Eigen::MatrixXd batch_ista(const Eigen::MatrixXd& y, const GroupedDictionary& dict,
                           const IstaConfig& cfg, ProxKind kind,
                           const Eigen::MatrixXd& init) {
  cfg.validate();
  dict.validate();
  if (y.rows() != dict.rows()) {
    throw DimensionError("observation rows do not match the dictionary");
  }
  const Eigen::Index n_samples = y.cols();
  Eigen::MatrixXd x(dict.cols(), n_samples);
  if (init.size() == 0) {
    x.setZero();
  } else if (init.rows() == dict.cols() && init.cols() == n_samples) {
    x = init;
  } else {
    throw DimensionError("init shape does not match (dict width, samples)");
  }
  const double step = resolve_step(cfg, dict);
  const double shrink = cfg.scale_lambda_by_step ? step * cfg.lambda : cfg.lambda;

  parallel_blocks(static_cast<std::size_t>(n_samples), kTile,
                  [&](std::size_t, std::size_t begin, std::size_t end) {
    const auto lo = static_cast<Eigen::Index>(begin);
    const auto width = static_cast<Eigen::Index>(end - begin);
    Eigen::MatrixXd xt = x.middleCols(lo, width);
    const Eigen::MatrixXd yt = y.middleCols(lo, width);
    Eigen::MatrixXd residual(yt.rows(), width);
    for (int t = 0; t < cfg.iterations; ++t) {
      residual.noalias() = yt - dict.matrix * xt;
      xt.noalias() += step * (dict.matrix.transpose() * residual);
      for (Eigen::Index j = 0; j < width; ++j) {
        apply_prox_inplace(xt.col(j), shrink, kind, dict.structure);
      }
    }
    x.middleCols(lo, width) = xt;
  });
  return x;
}

DictUpdateResult dictionary_update_ls(const Eigen::MatrixXd& y,
                                      const Eigen::MatrixXd& x,
                                      const Eigen::MatrixXd& previous) {
  if (y.cols() != x.cols()) {
    throw DimensionError("observations and codes disagree on sample count");
  }
  if (previous.rows() != y.rows() || previous.cols() != x.rows()) {
    throw DimensionError("previous dictionary has the wrong shape");
  }
  std::vector<Eigen::Index> active;
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    if (x.row(r).squaredNorm() > 0.0) active.push_back(r);
  }
  DictUpdateResult result;
  result.dictionary = previous;
  if (active.empty()) return result;

  const auto k = static_cast<Eigen::Index>(active.size());
  Eigen::MatrixXd xa(k, x.cols());
  for (Eigen::Index i = 0; i < k; ++i) xa.row(i) = x.row(active[i]);

  Eigen::MatrixXd gram(k, k);
  gram.noalias() = xa * xa.transpose();
  Eigen::MatrixXd rhs(k, y.rows());
  rhs.noalias() = xa * y.transpose();

  Eigen::LLT<Eigen::MatrixXd> llt(gram);
  // Rounding can leave an exactly singular Gram with a tiny positive pivot,
  // so a successful factorization with a collapsed pivot is still degenerate.
  bool degenerate = llt.info() != Eigen::Success;
  if (!degenerate) {
    const Eigen::VectorXd pivots = llt.matrixLLT().diagonal();
    degenerate = !(pivots.minCoeff() > 1e-6 * pivots.maxCoeff());
  }
  if (degenerate) {
    gram.diagonal().array() += 1e-10 * std::max(1.0, gram.trace());
    result.ridged = true;
    llt.compute(gram);
    if (llt.info() != Eigen::Success) {
      throw NumericError("code Gram matrix is not factorable even with ridge");
    }
  }
  const Eigen::MatrixXd sol = llt.solve(rhs);  // k x n, rows follow `active`
  for (Eigen::Index i = 0; i < k; ++i) {
    result.dictionary.col(active[i]) = sol.row(i).transpose();
  }
  return result;
}

AltMinResult alternating_minimization(const Eigen::MatrixXd& y,
                                      const GroupedDictionary& init, double lambda,
                                      const IstaConfig& ista_cfg, int outer_iters) {
  init.validate();
  if (y.rows() != init.rows()) {
    throw DimensionError("observations do not match the dictionary rows");
  }
  if (outer_iters < 0) throw ConfigError("outer_iters must be nonnegative");
  if (lambda < 0.0) throw ConfigError("lambda must be nonnegative");

  AltMinResult result;
  result.dictionary = init;
  result.codes = Eigen::MatrixXd::Zero(init.cols(), y.cols());

  IstaConfig cfg = ista_cfg;
  cfg.lambda = lambda;
  for (int it = 0; it < outer_iters; ++it) {
    // An empty cfg.step is re-resolved against the current dictionary inside
    // batch_ista; an explicit step is honored as given.
    result.codes = batch_ista(y, result.dictionary, cfg,
                              ProxKind::GroupSoftThreshold, result.codes);

    double objective = 0.5 * (y - result.dictionary.matrix * result.codes)
                                 .squaredNorm();
    for (Eigen::Index j = 0; j < result.codes.cols(); ++j) {
      objective +=
          lambda *
          group_norms(result.codes.col(j), result.dictionary.structure).sum();
    }
    result.objectives.push_back(objective);

    DictUpdateResult update =
        dictionary_update_ls(y, result.codes, result.dictionary.matrix);
    result.ridged = result.ridged || update.ridged;

    for (Eigen::Index j = 0; j < update.dictionary.cols(); ++j) {
      const double norm = update.dictionary.col(j).norm();
      if (norm == 0.0) {
        update.dictionary.col(j) = result.dictionary.matrix.col(j);
      } else {
        update.dictionary.col(j) /= norm;
        result.codes.row(j) *= norm;
      }
    }
    result.dictionary.matrix = std::move(update.dictionary);
  }
  return result;
}

}  // namespace gsae
