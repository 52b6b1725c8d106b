// Acceptance suite: ten numbered end-to-end checks with tolerances pinned in
// code. Each check prints its measured quantities followed by one
// [PASS]/[FAIL] line; the process exit code is the number of failed checks.
// Passing check numbers as arguments restricts the run (e.g. "4 5 10").

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "gsae/autoencoder.hpp"
#include "gsae/cluster.hpp"
#include "gsae/csv.hpp"
#include "gsae/errors.hpp"
#include "gsae/idx.hpp"
#include "gsae/parallel.hpp"
#include "gsae/prox.hpp"
#include "gsae/synth.hpp"
#include "gsae/theory.hpp"
#include "testutil.hpp"

namespace {

using gsae::AutoencoderState;
using gsae::GroupedDictionary;
using gsae::GroupSparseCode;
using gsae::GroupStructure;
using gsae::ProxKind;
using gsae::Rng;
using gsae::SynthConfig;
using gsae::TrainConfig;

struct Outcome {
  bool pass = false;
  std::string summary;
};

double now_seconds() {
  return std::chrono::duration<double>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

std::string fmt(double v, int precision = 4) {
  std::ostringstream ss;
  ss << std::setprecision(precision) << v;
  return ss.str();
}

void detail(const std::string& line) { std::cout << "  " << line << "\n"; }

// ---------------------------------------------------------------------------
// check 1: blockwise shrinkage against a brute-force radial oracle

// The group prox objective 0.5||x - v||^2 + lambda||x|| is rotation
// invariant around the ray through v, so the minimizer is t* (v/||v||) with
// t* minimizing the scalar f(t) = 0.5 (t - ||v||)^2 + lambda t over
// [0, ||v||]. A fine grid plus golden-section refinement finds t* without
// using the closed form under test.
Eigen::VectorXd radial_prox_oracle(const Eigen::VectorXd& v, double lambda) {
  const double r = v.norm();
  if (r == 0.0) return v;
  const auto f = [&](double t) {
    return 0.5 * (t - r) * (t - r) + lambda * t;
  };
  const int grid = 4000;
  double best_t = 0.0, best_f = f(0.0);
  for (int i = 1; i <= grid; ++i) {
    const double t = r * static_cast<double>(i) / grid;
    if (f(t) < best_f) {
      best_f = f(t);
      best_t = t;
    }
  }
  double a = std::max(0.0, best_t - 2.0 * r / grid);
  double b = std::min(r, best_t + 2.0 * r / grid);
  const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
  for (int it = 0; it < 200; ++it) {
    const double c = b - phi * (b - a);
    const double d = a + phi * (b - a);
    if (f(c) < f(d)) {
      b = d;
    } else {
      a = c;
    }
  }
  double t = 0.5 * (a + b);
  if (f(0.0) <= f(t)) t = 0.0;
  return (t / r) * v;
}

Outcome check1_prox_oracle() {
  const double start = now_seconds();
  Rng rng(1001);
  double worst = 0.0;
  for (int rep = 0; rep < 500; ++rep) {
    const int d = 2 + static_cast<int>(rng.below(4));
    Eigen::VectorXd v(d);
    for (int i = 0; i < d; ++i) v(i) = 2.0 * rng.normal();
    const double lambda = rng.uniform() * 1.2 * std::max(v.norm(), 0.1);
    const Eigen::VectorXd got = gsae::group_prox(v, lambda, {1, d});
    const Eigen::VectorXd want = radial_prox_oracle(v, lambda);
    worst = std::max(worst, (got - want).cwiseAbs().maxCoeff());
  }
  const double elapsed = now_seconds() - start;
  detail("max |prox - oracle| = " + fmt(worst, 3) + " over 500 instances, " +
         fmt(elapsed, 3) + "s (cap 10s)");
  return {worst < 1e-6 && elapsed < 10.0,
          "shrinkage matches the radial oracle to 1e-6"};
}

// ---------------------------------------------------------------------------
// check 2: analytic gradient against central finite differences

Eigen::MatrixXd fd_gradient(const AutoencoderState& ae, const Eigen::VectorXd& y,
                            double h) {
  AutoencoderState probe = ae;
  Eigen::MatrixXd grad(ae.dict.rows(), ae.dict.cols());
  for (int i = 0; i < grad.rows(); ++i) {
    for (int j = 0; j < grad.cols(); ++j) {
      const double orig = probe.dict.matrix(i, j);
      probe.dict.matrix(i, j) = orig + h;
      const double up = gsae::loss(probe, Eigen::MatrixXd(y));
      probe.dict.matrix(i, j) = orig - h;
      const double down = gsae::loss(probe, Eigen::MatrixXd(y));
      probe.dict.matrix(i, j) = orig;
      grad(i, j) = (up - down) / (2.0 * h);
    }
  }
  return grad;
}

// Observation whose group pre-activations all clear the threshold by at least
// `margin`, with at least one active group, so the loss is smooth around A.
Eigen::VectorXd margin_sample(const AutoencoderState& ae, Rng& rng,
                              double margin) {
  const GroupStructure& gs = ae.dict.structure;
  for (int tries = 0; tries < 4000; ++tries) {
    Eigen::VectorXd y(ae.dict.rows());
    for (int i = 0; i < y.size(); ++i) y(i) = 1.5 * rng.normal();
    const Eigen::VectorXd u = ae.dict.matrix.transpose() * y;
    bool ok = true, any = false;
    for (int g = 0; g < gs.num_groups; ++g) {
      const double norm = u.segment(gs.first_column(g), gs.group_size).norm();
      ok = ok && std::abs(norm - ae.lambda) >= margin;
      any = any || norm > ae.lambda;
    }
    if (ok && any) return y;
  }
  throw gsae::NumericError("could not condition a sample away from thresholds");
}

Outcome check2_gradient_fd() {
  const double start = now_seconds();
  Rng rng(1002);
  double worst_rel = 0.0;
  for (int rep = 0; rep < 200; ++rep) {
    const int n = 6 + static_cast<int>(rng.below(11));
    const int num_groups = 2 + static_cast<int>(rng.below(7));
    const int d = 2 + static_cast<int>(rng.below(2));
    const GroupedDictionary dict = testutil::random_dict(
        n, num_groups, d, 2000 + static_cast<std::uint64_t>(rep));
    AutoencoderState ae{dict, 0.3 + 1.2 * rng.uniform(),
                        ProxKind::GroupSoftThreshold, 1, {}};
    const Eigen::VectorXd y = margin_sample(ae, rng, 1e-3);
    const Eigen::MatrixXd analytic = gsae::gradient_analytic(ae, y);
    const Eigen::MatrixXd fd = fd_gradient(ae, y, 1e-6);
    const double scale = std::max(fd.cwiseAbs().maxCoeff(), 1e-12);
    worst_rel =
        std::max(worst_rel, (analytic - fd).cwiseAbs().maxCoeff() / scale);
  }
  const double elapsed = now_seconds() - start;
  detail("max relative error = " + fmt(worst_rel, 3) +
         " over 200 instances, " + fmt(elapsed, 3) + "s (cap 30s)");
  return {worst_rel < 1e-5 && elapsed < 30.0,
          "analytic gradient matches finite differences to 1e-5"};
}

// ---------------------------------------------------------------------------
// checks 3 and 7 share the same noiseless instance and perturbed weights

struct RecoverySetup {
  gsae::Dataset data;
  GroupedDictionary dict;
  double b_min = 0.0;
  double b_max = 0.0;
  gsae::ModelBounds bounds;
  std::optional<std::pair<double, double>> range;
};

RecoverySetup recovery_setup() {
  SynthConfig cfg;
  cfg.signal_dim = 100;
  cfg.structure = {64, 2};
  cfg.active_groups = 3;
  cfg.num_samples = 2000;
  cfg.seed = 300;
  RecoverySetup s;
  s.data = gsae::generate(cfg);
  Rng rng(301);
  s.dict = gsae::perturb_init(s.data.dictionary, 0.98, rng);
  s.b_min = std::numeric_limits<double>::infinity();
  for (const GroupSparseCode& code : s.data.codes) {
    for (const int g : code.support) {
      const double norm = code.values.segment(2 * g, 2).norm();
      s.b_min = std::min(s.b_min, norm);
      s.b_max = std::max(s.b_max, norm);
    }
  }
  s.bounds = gsae::measure_bounds(s.dict, s.data.dictionary, 3, s.b_min, s.b_max);
  s.range = gsae::lambda_range(s.bounds);
  return s;
}

Outcome check3_support_recovery() {
  const RecoverySetup s = recovery_setup();
  detail("measured delta = " + fmt(s.bounds.delta) + ", mu_b = " +
         fmt(s.bounds.mu_b) + ", realized norms [" + fmt(s.b_min) + ", " +
         fmt(s.b_max) + "]");
  detail("aligned-term floor = " + fmt(gsae::group_norm_lower_bound(s.bounds)) +
         ", cross-term ceiling = " + fmt(gsae::cross_term_upper_bound(s.bounds)));
  if (!s.range) {
    detail("separation window: empty (the cross term exceeds the aligned "
           "floor at this perturbation level), no threshold can be chosen");
    return {false, "one-step support recovery inside the measured window"};
  }
  const double lambda = 0.5 * (s.range->first + s.range->second);
  detail("window [" + fmt(s.range->first) + ", " + fmt(s.range->second) +
         "], encoding at its midpoint " + fmt(lambda));
  AutoencoderState ae{s.dict, lambda, ProxKind::GroupSoftThreshold, 1, {}};
  long matched = 0;
  for (std::size_t i = 0; i < s.data.codes.size(); ++i) {
    const GroupSparseCode code =
        gsae::encode(ae, s.data.observations.col(static_cast<Eigen::Index>(i)));
    if (code.support == s.data.codes[i].support) ++matched;
  }
  detail("exact support matches: " + std::to_string(matched) + " / 2000");
  return {matched == 2000, "one-step support recovery inside the measured window"};
}

// ---------------------------------------------------------------------------
// check 4: training drives the dictionary error down fivefold

struct C4Run {
  double initial = 0.0;
  double final_err = 0.0;
  double elapsed = 0.0;
  std::string csv;
};

C4Run run_c4_pipeline(int threads) {
  static std::map<int, C4Run> cache;
  const auto hit = cache.find(threads);
  if (hit != cache.end()) return hit->second;

  gsae::set_thread_count(threads);
  const double start = now_seconds();
  SynthConfig cfg;
  cfg.signal_dim = 100;
  cfg.structure = {64, 2};
  cfg.active_groups = 3;
  cfg.num_samples = 2000;
  cfg.snr_db = 10.0;
  cfg.seed = 400;
  const gsae::Dataset ds = gsae::generate(cfg);
  Rng rng(401);
  AutoencoderState ae{gsae::perturb_init(ds.dictionary, 0.7, rng), 2.0,
                      ProxKind::GroupSoftThreshold, 1, {}};
  TrainConfig tc;
  tc.learning_rate = 1e-3;
  tc.epochs = 300;
  const std::vector<std::vector<int>> supports = ds.supports();
  gsae::TruthRef truth;
  truth.dictionary = &ds.dictionary;
  truth.supports = &supports;
  const gsae::TrainHistory history = gsae::train(ae, ds.observations, tc, truth);
  gsae::set_thread_count(0);

  C4Run run;
  run.initial = history.records.front().dict_error;
  run.final_err = history.records.back().dict_error;
  run.elapsed = now_seconds() - start;
  testutil::TempDir tmp("gsae_acc_c4");
  const std::string path = tmp.file("history.csv");
  {
    gsae::CsvWriter csv(path, {"epoch", "loss", "dict_error", "support_rate"});
    for (const gsae::EpochRecord& rec : history.records) {
      csv.write_row(std::vector<double>{static_cast<double>(rec.epoch), rec.loss,
                                        rec.dict_error, rec.support_rate});
    }
  }
  run.csv = testutil::read_file(path);
  cache[threads] = run;
  return run;
}

Outcome check4_convergence() {
  const C4Run run = run_c4_pipeline(0);
  detail("normalized dictionary error " + fmt(run.initial) + " -> " +
         fmt(run.final_err) + " over 300 epochs, " + fmt(run.elapsed, 3) +
         "s (cap 300s)");
  return {run.final_err <= 0.2 * run.initial && run.elapsed < 300.0,
          "adam training cuts the dictionary error to a fifth"};
}

// ---------------------------------------------------------------------------
// check 5: group shrinkage beats the elementwise baseline seed by seed

struct C5Run {
  double dict_group = 0.0, dict_sparse = 0.0;
  double srr_group = 0.0, srr_sparse = 0.0;
  std::string csv;
};

// The elementwise threshold is the group threshold's per-entry equivalent:
// a group of size d at norm-threshold lambda corresponds to entries at
// lambda/sqrt(d); here lambda = 2, d = 2.
constexpr double kSparseLambda = 1.4142135623730951;

C5Run run_c5_seed(std::uint64_t seed, int threads) {
  static std::map<std::pair<std::uint64_t, int>, C5Run> cache;
  const auto key = std::make_pair(seed, threads);
  const auto hit = cache.find(key);
  if (hit != cache.end()) return hit->second;

  gsae::set_thread_count(threads);
  SynthConfig cfg;
  cfg.signal_dim = 100;
  cfg.structure = {64, 2};
  cfg.active_groups = 3;
  cfg.num_samples = 2000;
  cfg.snr_db = 10.0;
  cfg.seed = 500 + seed;
  const gsae::Dataset ds = gsae::generate(cfg);
  Rng rng(550 + seed);
  const GroupedDictionary init = gsae::perturb_init(ds.dictionary, 0.7, rng);
  TrainConfig tc;
  tc.learning_rate = 1e-3;
  tc.epochs = 300;
  const std::vector<std::vector<int>> supports = ds.supports();
  gsae::TruthRef truth;
  truth.dictionary = &ds.dictionary;
  truth.supports = &supports;

  AutoencoderState group_ae{init, 2.0, ProxKind::GroupSoftThreshold, 1, {}};
  const gsae::TrainHistory group_hist =
      gsae::train(group_ae, ds.observations, tc, truth);
  AutoencoderState sparse_ae{init, kSparseLambda, ProxKind::SoftThreshold, 1, {}};
  const gsae::TrainHistory sparse_hist =
      gsae::train(sparse_ae, ds.observations, tc, truth);
  gsae::set_thread_count(0);

  C5Run run;
  run.dict_group = group_hist.records.back().dict_error;
  run.srr_group = group_hist.records.back().support_rate;
  run.dict_sparse = sparse_hist.records.back().dict_error;
  run.srr_sparse = sparse_hist.records.back().support_rate;

  testutil::TempDir tmp("gsae_acc_c5");
  const std::string path = tmp.file("compare.csv");
  {
    gsae::CsvWriter csv(path,
                        {"prox", "epoch", "loss", "dict_error", "support_rate"});
    for (const gsae::TrainHistory* hist : {&group_hist, &sparse_hist}) {
      const char* name = hist == &group_hist ? "group" : "sparse";
      for (const gsae::EpochRecord& rec : hist->records) {
        csv.write_row(std::vector<std::string>{
            name, gsae::format_double(rec.epoch), gsae::format_double(rec.loss),
            gsae::format_double(rec.dict_error),
            gsae::format_double(rec.support_rate)});
      }
    }
  }
  run.csv = testutil::read_file(path);
  cache[key] = run;
  return run;
}

Outcome check5_group_beats_sparse() {
  int wins = 0;
  for (std::uint64_t s = 0; s < 5; ++s) {
    const C5Run run = run_c5_seed(s, 0);
    const bool win =
        run.dict_group < run.dict_sparse && run.srr_group > run.srr_sparse;
    wins += win ? 1 : 0;
    detail("seed " + std::to_string(s) + ": dict_error group " +
           fmt(run.dict_group) + " vs sparse " + fmt(run.dict_sparse) +
           ", support_rate group " + fmt(run.srr_group) + " vs sparse " +
           fmt(run.srr_sparse) + (win ? "  [win]" : "  [loss]"));
  }
  detail("group wins both metrics in " + std::to_string(wins) + " / 5 seeds");
  return {wins >= 4, "group shrinkage beats the elementwise baseline"};
}

// ---------------------------------------------------------------------------
// check 6: the expected surrogate gradient points toward the generator

Outcome check6_alignment() {
  SynthConfig cfg;
  cfg.signal_dim = 64;
  cfg.structure = {16, 2};
  cfg.active_groups = 2;
  cfg.num_samples = 1;
  cfg.seed = 602;
  Rng drng(600);
  const GroupedDictionary star = gsae::sample_dictionary(cfg, drng);
  Rng prng(601);
  const GroupedDictionary dict = gsae::perturb_init(star, 0.9, prng);
  const gsae::AlignmentReport rep =
      gsae::expected_gradient_mc(dict, star, cfg, 2.0, 20000);
  int positive = 0;
  for (Eigen::Index i = 0; i < rep.inner.size(); ++i) {
    if (rep.inner(i) > 0.0) ++positive;
  }
  const double frac =
      static_cast<double>(positive) / static_cast<double>(rep.inner.size());
  detail("inner products positive for " + std::to_string(positive) + " / " +
         std::to_string(rep.inner.size()) + " columns (" + fmt(100.0 * frac, 4) +
         "%), min " + fmt(rep.inner.minCoeff()) + ", max se " +
         fmt(rep.inner_se.maxCoeff()) + ", 20000 draws");
  detail(std::string("threshold inside measured window: ") +
         (rep.lambda_in_range ? "yes" : "no"));
  return {frac >= 0.95, "expected gradient aligns with the error direction"};
}

// ---------------------------------------------------------------------------
// check 7: per-group errors contract under plain gradient descent

Outcome check7_contraction() {
  const RecoverySetup s = recovery_setup();
  // The measured separation window is empty at this perturbation level
  // (check 3 reports the arithmetic), so the threshold cannot be taken from
  // it; 3.0 keeps every true group active across the dataset while blocking
  // the cross terms, which is the regime the contraction statement describes.
  const double lambda = 3.0;
  const double eta = 1e-3;
  const gsae::GeometryStats geo = gsae::measure_geometry(
      s.dict, s.data.dictionary, s.data.observations, lambda);
  AutoencoderState ae{s.dict, lambda, ProxKind::GroupSoftThreshold, 1, {}};
  TrainConfig tc;
  tc.optimizer = gsae::Optimizer::PlainGd;
  tc.learning_rate = eta;
  tc.epochs = 50;
  gsae::TruthRef truth;
  truth.dictionary = &s.data.dictionary;
  const gsae::TrainHistory hist = gsae::train(ae, s.data.observations, tc, truth);
  const gsae::ContractionReport rep =
      gsae::contraction_trace(hist, s.bounds, eta, geo);

  int contracting = 0;
  for (int g = 0; g < 64; ++g) {
    if (rep.per_group_median(g) < 1.0) ++contracting;
  }
  detail("per-group median squared-error ratios: " + std::to_string(contracting) +
         " / 64 below 1, max " + fmt(rep.per_group_median.maxCoeff()));
  detail("predicted contraction rho = " + fmt(rep.rho) + ", eta_max = " +
         fmt(rep.eta_max) + ", tau_bar = " + fmt(geo.tau_bar));
  detail("additive floor (reported, not asserted): unit-constant form " +
         fmt(rep.additive_unit) + ", log form " + fmt(rep.additive_log));
  detail(std::string("step admissibility precondition holds: ") +
         (rep.precondition_holds ? "yes" : "no") + " (lhs " +
         fmt(rep.precondition_lhs) + ", rhs " + fmt(rep.precondition_rhs) + ")");
  return {contracting == 64, "median per-group error ratios stay below one"};
}

// ---------------------------------------------------------------------------
// check 8: worst-case support bounds hold on random instances

Outcome check8_bound_soundness() {
  double max_delta = 0.0;
  long violations = 0;
  double min_margin = std::numeric_limits<double>::infinity();
  for (std::uint64_t k = 0; k < 10; ++k) {
    SynthConfig cfg;
    cfg.signal_dim = 100;
    cfg.structure = {64, 2};
    cfg.active_groups = 3;
    cfg.num_samples = 500;
    cfg.seed = 800 + k;
    const gsae::Dataset ds = gsae::generate(cfg);
    Rng rng(850 + k);
    const GroupedDictionary dict = gsae::perturb_init(ds.dictionary, 0.999, rng);
    const gsae::SupportBoundReport rep = gsae::verify_support_bounds(dict, ds);
    max_delta = std::max(max_delta, rep.delta_hat);
    violations += rep.active_violations + rep.inactive_violations +
                  rep.triangle_violations;
    min_margin = std::min(
        min_margin, std::min(rep.min_active_margin, rep.min_inactive_margin));
  }
  detail("10 datasets, max measured delta = " + fmt(max_delta) +
         " (must be <= 0.1), total violations = " + std::to_string(violations) +
         ", smallest margin = " + fmt(min_margin));
  return {max_delta <= 0.1 && violations == 0,
          "active/inactive norm bounds hold without exception"};
}

// ---------------------------------------------------------------------------
// check 9: encoded representations improve image clustering

struct IdxPair {
  std::string images;
  std::string labels;
};

std::optional<IdxPair> find_idx_pair(const std::string& dir) {
  const std::vector<std::pair<std::string, std::string>> candidates = {
      {"train-images-idx3-ubyte", "train-labels-idx1-ubyte"},
      {"train-images.idx3-ubyte", "train-labels.idx1-ubyte"},
      {"t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte"},
      {"t10k-images.idx3-ubyte", "t10k-labels.idx1-ubyte"}};
  for (const auto& [img, lab] : candidates) {
    const std::string ipath = dir + "/" + img;
    const std::string lpath = dir + "/" + lab;
    if (std::ifstream(ipath).good() && std::ifstream(lpath).good()) {
      return IdxPair{ipath, lpath};
    }
  }
  return std::nullopt;
}

Outcome check9_clustering() {
  std::string dir = GSAE_FIXTURE_DIR;
  if (const char* env = std::getenv("GSAE_MNIST_DIR")) dir = env;
  const std::optional<IdxPair> pair = find_idx_pair(dir);
  if (!pair) {
    detail("no idx image/label pair found under " + dir);
    return {false, "clustering comparison on encoded representations"};
  }
  const gsae::IdxImages images = gsae::load_idx_images(pair->images);
  std::vector<int> labels = gsae::load_idx_labels(pair->labels);
  const Eigen::Index n_use =
      std::min<Eigen::Index>(2000, images.pixels.cols());
  const Eigen::MatrixXd obs = images.pixels.leftCols(n_use);
  labels.resize(static_cast<std::size_t>(n_use));
  detail("data: " + std::to_string(obs.rows()) + "-pixel images, first " +
         std::to_string(n_use) + " of " + pair->images);

  std::vector<double> acc_raw, acc_group, acc_sparse, acc_simplex;
  for (std::uint64_t s = 0; s < 5; ++s) {
    gsae::ClusterConfig cc;
    cc.k = 10;
    cc.seed = 920 + s;
    const auto accuracy_of = [&](const Eigen::MatrixXd& feats) {
      const gsae::KmeansResult km = gsae::kmeans(feats, cc);
      const std::vector<int> pred(km.labels.data(),
                                  km.labels.data() + km.labels.size());
      return gsae::clustering_accuracy(pred, labels);
    };

    SynthConfig dcfg;
    dcfg.signal_dim = static_cast<int>(obs.rows());
    dcfg.structure = {10, 16};
    dcfg.active_groups = 1;
    dcfg.num_samples = 1;
    dcfg.seed = 910 + s;
    Rng drng(910 + s);
    const GroupedDictionary init = gsae::sample_dictionary(dcfg, drng);
    TrainConfig tc;
    tc.learning_rate = 1e-3;
    tc.epochs = 50;

    AutoencoderState group_ae{init, 0.2, ProxKind::GroupSoftThreshold, 15, {}};
    gsae::train(group_ae, obs, tc);
    const Eigen::MatrixXd group_codes = gsae::batch_encode(group_ae, obs);

    AutoencoderState sparse_ae{init, 0.03, ProxKind::SoftThreshold, 15, {}};
    gsae::train(sparse_ae, obs, tc);
    const Eigen::MatrixXd sparse_codes = gsae::batch_encode(sparse_ae, obs);

    acc_raw.push_back(accuracy_of(obs));
    acc_group.push_back(accuracy_of(group_codes));
    acc_sparse.push_back(accuracy_of(sparse_codes));
    acc_simplex.push_back(accuracy_of(gsae::codes_nonneg_simplex(group_codes)));
    detail("seed " + std::to_string(s) + ": raw " + fmt(100 * acc_raw.back()) +
           ", group " + fmt(100 * acc_group.back()) + ", sparse " +
           fmt(100 * acc_sparse.back()) + ", group+simplex " +
           fmt(100 * acc_simplex.back()));
  }

  const bool group_over_raw = acc_group[0] > acc_raw[0];
  const double simplex_drop = acc_group[0] - acc_simplex[0];
  const bool simplex_ok = simplex_drop <= 0.02;
  int ordered = 0;
  for (int s = 0; s < 5; ++s) {
    if (acc_group[static_cast<std::size_t>(s)] >
            acc_sparse[static_cast<std::size_t>(s)] &&
        acc_sparse[static_cast<std::size_t>(s)] >
            acc_raw[static_cast<std::size_t>(s)]) {
      ++ordered;
    }
  }
  detail(std::string("group > raw on seed 0: ") +
         (group_over_raw ? "yes" : "no") + "; simplex drop " +
         fmt(100 * simplex_drop) + " pts (allowed 2); group > sparse > raw in " +
         std::to_string(ordered) + " / 5 seeds (need 4)");
  return {group_over_raw && simplex_ok && ordered >= 4,
          "encoded features improve clustering in the stated order"};
}

// ---------------------------------------------------------------------------
// check 10: byte-identical outputs across thread counts

std::string run_c3_encode_csv(int threads) {
  static std::map<int, std::string> cache;
  const auto hit = cache.find(threads);
  if (hit != cache.end()) return hit->second;

  gsae::set_thread_count(threads);
  const RecoverySetup s = recovery_setup();
  // midpoint when the window exists, otherwise a fixed in-scale threshold:
  // the determinism contract is about reproducibility, not recovery
  const double lambda =
      s.range ? 0.5 * (s.range->first + s.range->second) : 2.0;
  AutoencoderState ae{s.dict, lambda, ProxKind::GroupSoftThreshold, 1, {}};
  const Eigen::MatrixXd codes = gsae::batch_encode(ae, s.data.observations);
  gsae::set_thread_count(0);

  testutil::TempDir tmp("gsae_acc_c3");
  const std::string path = tmp.file("encode.csv");
  {
    gsae::CsvWriter csv(path, {"sample", "matched", "support"});
    for (Eigen::Index i = 0; i < codes.cols(); ++i) {
      const std::vector<int> support =
          gsae::group_support(codes.col(i), s.dict.structure);
      std::string joined;
      for (const int g : support) {
        if (!joined.empty()) joined += ';';
        joined += std::to_string(g);
      }
      const bool matched =
          support == s.data.codes[static_cast<std::size_t>(i)].support;
      csv.write_row(std::vector<std::string>{
          std::to_string(i), matched ? "1" : "0", joined});
    }
  }
  const std::string bytes = testutil::read_file(path);
  cache[threads] = bytes;
  return bytes;
}

Outcome check10_determinism() {
  bool all_equal = true;
  const auto report = [&](const std::string& name, const std::string& base,
                          const std::string& one, const std::string& five) {
    const bool equal = base == one && one == five;
    all_equal = all_equal && equal;
    detail(name + ": " + std::to_string(base.size()) + " bytes, threads {auto, 1, 5} " +
           (equal ? "identical" : "DIFFER"));
  };

  report("support-recovery encode csv", run_c3_encode_csv(0),
         run_c3_encode_csv(1), run_c3_encode_csv(5));
  report("training history csv", run_c4_pipeline(0).csv, run_c4_pipeline(1).csv,
         run_c4_pipeline(5).csv);
  report("shrinkage comparison csv", run_c5_seed(0, 0).csv,
         run_c5_seed(0, 1).csv, run_c5_seed(0, 5).csv);
  return {all_equal, "csv outputs are byte-identical across thread counts"};
}

// ---------------------------------------------------------------------------

struct Check {
  int number;
  const char* name;
  Outcome (*fn)();
};

}  // namespace

int main(int argc, char** argv) {
  const Check checks[] = {
      {1, "prox vs brute-force oracle", check1_prox_oracle},
      {2, "gradient vs finite differences", check2_gradient_fd},
      {3, "one-step support recovery", check3_support_recovery},
      {4, "training convergence", check4_convergence},
      {5, "group vs elementwise shrinkage", check5_group_beats_sparse},
      {6, "expected gradient alignment", check6_alignment},
      {7, "per-group error contraction", check7_contraction},
      {8, "support bound soundness", check8_bound_soundness},
      {9, "clustering with encoded features", check9_clustering},
      {10, "thread-count determinism", check10_determinism},
  };

  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));

  int failures = 0;
  int ran = 0;
  for (const Check& check : checks) {
    if (!selected.empty() && selected.count(check.number) == 0) continue;
    ++ran;
    std::cout << "[C" << check.number << "] " << check.name << "\n";
    Outcome outcome;
    const double start = now_seconds();
    try {
      outcome = check.fn();
    } catch (const std::exception& e) {
      detail(std::string("unexpected exception: ") + e.what());
      outcome = {false, "aborted by exception"};
    }
    const double elapsed = now_seconds() - start;
    std::cout << (outcome.pass ? "[PASS] C" : "[FAIL] C") << check.number
              << " " << outcome.summary << " (" << fmt(elapsed, 4) << "s)\n";
    failures += outcome.pass ? 0 : 1;
  }
  std::cout << (ran - failures) << " / " << ran << " checks passed\n";
  return failures;
}
