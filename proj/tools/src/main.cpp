// Experiment driver: synth, train, compare, theory-check, cluster.
//
// Every subcommand reads one JSON config, writes its outputs plus a
// manifest.json (config echo and FNV-1a checksums) into --out, and is
// deterministic given the config. Exit codes: 0 success, 2 config error,
// 3 numeric divergence, 4 I/O error.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "gsae/autoencoder.hpp"
#include "gsae/cluster.hpp"
#include "gsae/container.hpp"
#include "gsae/csv.hpp"
#include "gsae/errors.hpp"
#include "gsae/idx.hpp"
#include "gsae/parallel.hpp"
#include "gsae/prox.hpp"
#include "gsae/synth.hpp"
#include "gsae/theory.hpp"

namespace {

using nlohmann::json;

json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw gsae::IoError(path + ": cannot open");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw gsae::ConfigError(path + ": invalid JSON: " + e.what());
  }
}

void write_json(const std::string& path, const json& j) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw gsae::IoError(path + ": cannot open for writing");
  out << j.dump(2) << '\n';
  if (!out) throw gsae::IoError(path + ": write failed");
}

// Field access that names the offending config path in the error.
const json& need(const json& j, const std::string& where, const char* key) {
  const auto it = j.find(key);
  if (it == j.end()) {
    throw gsae::ConfigError(where + "." + key + ": missing");
  }
  return *it;
}

template <class T>
T need_as(const json& j, const std::string& where, const char* key) {
  try {
    return need(j, where, key).get<T>();
  } catch (const json::exception&) {
    throw gsae::ConfigError(where + "." + key + ": wrong type");
  }
}

template <class T>
T opt_as(const json& j, const std::string& where, const char* key, T fallback) {
  const auto it = j.find(key);
  if (it == j.end() || it->is_null()) return fallback;
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    throw gsae::ConfigError(where + "." + key + ": wrong type");
  }
}

std::uint64_t fnv1a_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw gsae::IoError(path + ": cannot open for checksum");
  std::uint64_t hash = 1469598103934665603ull;
  char buf[1 << 16];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    const std::streamsize got = in.gcount();
    for (std::streamsize i = 0; i < got; ++i) {
      hash ^= static_cast<unsigned char>(buf[i]);
      hash *= 1099511628211ull;
    }
    if (got < static_cast<std::streamsize>(sizeof(buf))) break;
  }
  return hash;
}

std::string hex64(std::uint64_t v) {
  char hex[17];
  std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(v));
  return hex;
}

void write_manifest(const std::filesystem::path& out_dir, const char* command,
                    const json& config, const std::vector<std::string>& files) {
  json manifest;
  manifest["command"] = command;
  manifest["config"] = config;
  manifest["outputs"] = json::object();
  for (const std::string& f : files) {
    manifest["outputs"][f] = {
        {"fnv1a", hex64(fnv1a_file((out_dir / f).string()))}};
  }
  write_json((out_dir / "manifest.json").string(), manifest);
}

gsae::SynthConfig parse_synth(const json& j, const std::string& where,
                              std::optional<std::uint64_t> seed_override) {
  gsae::SynthConfig cfg;
  cfg.signal_dim = need_as<int>(j, where, "signal_dim");
  cfg.structure.num_groups = need_as<int>(j, where, "num_groups");
  cfg.structure.group_size = need_as<int>(j, where, "group_size");
  cfg.active_groups = need_as<int>(j, where, "active_groups");
  cfg.num_samples = need_as<int>(j, where, "num_samples");
  cfg.scale_low = opt_as<double>(j, where, "scale_low", cfg.scale_low);
  cfg.scale_high = opt_as<double>(j, where, "scale_high", cfg.scale_high);
  const auto snr = j.find("snr_db");
  if (snr != j.end() && !snr->is_null()) {
    cfg.snr_db = snr->get<double>();
  }
  cfg.seed = opt_as<std::uint64_t>(j, where, "seed", 0);
  if (seed_override) cfg.seed = *seed_override;
  cfg.validate();
  return cfg;
}

gsae::TrainConfig parse_train(const json& j, const std::string& where) {
  gsae::TrainConfig cfg;
  const std::string opt = opt_as<std::string>(j, where, "optimizer", "adam");
  if (opt == "adam") {
    cfg.optimizer = gsae::Optimizer::Adam;
  } else if (opt == "gd") {
    cfg.optimizer = gsae::Optimizer::PlainGd;
  } else {
    throw gsae::ConfigError(where + ".optimizer: expected 'adam' or 'gd'");
  }
  cfg.learning_rate = need_as<double>(j, where, "learning_rate");
  cfg.epochs = need_as<int>(j, where, "epochs");
  cfg.beta1 = opt_as<double>(j, where, "beta1", cfg.beta1);
  cfg.beta2 = opt_as<double>(j, where, "beta2", cfg.beta2);
  cfg.eps_adam = opt_as<double>(j, where, "eps_adam", cfg.eps_adam);
  cfg.divergence_guard =
      opt_as<double>(j, where, "divergence_guard", cfg.divergence_guard);
  cfg.validate();
  return cfg;
}

gsae::ClusterConfig parse_cluster(const json& j, const std::string& where,
                                  std::optional<std::uint64_t> seed_override) {
  gsae::ClusterConfig cfg;
  cfg.k = need_as<int>(j, where, "k");
  cfg.knn = opt_as<int>(j, where, "knn", cfg.knn);
  cfg.kmeans_restarts =
      opt_as<int>(j, where, "kmeans_restarts", cfg.kmeans_restarts);
  cfg.max_iters = opt_as<int>(j, where, "max_iters", cfg.max_iters);
  cfg.seed = opt_as<std::uint64_t>(j, where, "seed", 0);
  if (seed_override) cfg.seed = *seed_override;
  cfg.validate();
  return cfg;
}

// Autoencoder weights for training: a perturbation of the generating
// dictionary, or a previous checkpoint (whose epoch offsets the history).
struct InitResult {
  gsae::GroupedDictionary dict;
  int epoch_offset = 0;
  std::optional<gsae::AutoencoderState> from_checkpoint;
};

InitResult parse_init(const json& j, const std::string& where,
                      const gsae::Dataset& ds,
                      std::optional<std::uint64_t> seed_override) {
  InitResult init;
  const std::string kind = need_as<std::string>(j, where, "kind");
  if (kind == "perturb") {
    const double corr = need_as<double>(j, where, "target_corr");
    std::uint64_t seed = opt_as<std::uint64_t>(j, where, "seed", 0);
    if (seed_override) seed = *seed_override;
    const bool normalize = opt_as<bool>(j, where, "normalize", true);
    gsae::Rng rng(seed);
    init.dict = gsae::perturb_init(ds.dictionary, corr, rng, normalize);
  } else if (kind == "checkpoint") {
    const std::string path = need_as<std::string>(j, where, "path");
    gsae::Checkpoint cp = gsae::load_checkpoint(path);
    if (cp.state.dict.rows() != ds.dictionary.rows() ||
        !(cp.state.dict.structure == ds.dictionary.structure)) {
      throw gsae::DimensionError(path + ": checkpoint shape does not match dataset");
    }
    init.dict = cp.state.dict;
    init.epoch_offset = cp.epoch;
    init.from_checkpoint = std::move(cp.state);
  } else {
    throw gsae::ConfigError(where + ".kind: expected 'perturb' or 'checkpoint'");
  }
  return init;
}

gsae::AutoencoderState parse_autoencoder(const json& j, const std::string& where,
                                         gsae::GroupedDictionary dict) {
  gsae::AutoencoderState ae;
  ae.dict = std::move(dict);
  ae.lambda = need_as<double>(j, where, "lambda");
  ae.prox = gsae::prox_kind_from_string(
      opt_as<std::string>(j, where, "prox", "group"));
  ae.unroll = opt_as<int>(j, where, "unroll", 1);
  const auto step = j.find("ista_step");
  if (step != j.end() && !step->is_null()) {
    ae.ista_step = step->get<double>();
  }
  ae.validate();
  return ae;
}

void write_history_csv(const std::string& path, const gsae::TrainHistory& history,
                       int epoch_offset) {
  gsae::CsvWriter csv(path, {"epoch", "loss", "dict_error", "support_rate"});
  for (const gsae::EpochRecord& rec : history.records) {
    csv.write_row(std::vector<double>{
        static_cast<double>(rec.epoch + epoch_offset), rec.loss, rec.dict_error,
        rec.support_rate});
  }
}

int cmd_synth(const json& config, const std::filesystem::path& out,
              std::optional<std::uint64_t> seed_override) {
  const gsae::SynthConfig cfg =
      parse_synth(need(config, "config", "synth"), "synth", seed_override);
  const gsae::Dataset ds = gsae::generate(cfg);
  gsae::save_dataset((out / "dataset.bin").string(), ds, config);
  write_manifest(out, "synth", config, {"dataset.bin"});
  std::cout << "dataset " << ds.observations.rows() << "x"
            << ds.observations.cols() << " -> " << (out / "dataset.bin").string()
            << "\n";
  return 0;
}

int cmd_train(const json& config, const std::filesystem::path& out,
              std::optional<std::uint64_t> seed_override) {
  const std::string dataset_path =
      need_as<std::string>(config, "config", "dataset");
  const gsae::Dataset ds = gsae::load_dataset(dataset_path);
  InitResult init = parse_init(need(config, "config", "init"), "init", ds,
                               seed_override);
  gsae::AutoencoderState ae = parse_autoencoder(
      need(config, "config", "autoencoder"), "autoencoder", init.dict);
  if (init.from_checkpoint) {
    // Resumes keep the checkpointed shrinkage settings unless re-specified.
    ae.lambda = init.from_checkpoint->lambda;
    ae.prox = init.from_checkpoint->prox;
    ae.unroll = init.from_checkpoint->unroll;
    ae.ista_step = init.from_checkpoint->ista_step;
  }
  const gsae::TrainConfig train_cfg =
      parse_train(need(config, "config", "train"), "train");

  const std::vector<std::vector<int>> supports = ds.supports();
  gsae::TruthRef truth;
  truth.dictionary = &ds.dictionary;
  truth.supports = &supports;
  const gsae::TrainHistory history =
      gsae::train(ae, ds.observations, train_cfg, truth);

  write_history_csv((out / "history.csv").string(), history, init.epoch_offset);
  gsae::save_checkpoint((out / "checkpoint.bin").string(),
                        {ae, init.epoch_offset + train_cfg.epochs});
  write_manifest(out, "train", config, {"history.csv", "checkpoint.bin"});
  const gsae::EpochRecord& last = history.records.back();
  std::cout << "trained " << train_cfg.epochs << " epochs, loss " << last.loss
            << ", dict_error " << last.dict_error << "\n";
  return 0;
}

int cmd_compare(const json& config, const std::filesystem::path& out,
                std::optional<std::uint64_t> seed_override) {
  const std::string dataset_path =
      need_as<std::string>(config, "config", "dataset");
  const gsae::Dataset ds = gsae::load_dataset(dataset_path);
  const InitResult init = parse_init(need(config, "config", "init"), "init", ds,
                                     seed_override);
  const gsae::TrainConfig train_cfg =
      parse_train(need(config, "config", "train"), "train");
  const std::vector<std::vector<int>> supports = ds.supports();
  gsae::TruthRef truth;
  truth.dictionary = &ds.dictionary;
  truth.supports = &supports;

  gsae::CsvWriter csv((out / "compare.csv").string(),
                      {"prox", "epoch", "loss", "dict_error", "support_rate"});
  json summary;
  for (const char* which : {"group", "sparse"}) {
    gsae::AutoencoderState ae = parse_autoencoder(
        need(config, "config", which), which, init.dict);
    const gsae::TrainHistory history =
        gsae::train(ae, ds.observations, train_cfg, truth);
    for (const gsae::EpochRecord& rec : history.records) {
      csv.write_row(std::vector<std::string>{
          gsae::to_string(ae.prox), gsae::format_double(rec.epoch),
          gsae::format_double(rec.loss), gsae::format_double(rec.dict_error),
          gsae::format_double(rec.support_rate)});
    }
    const gsae::EpochRecord& last = history.records.back();
    summary[which] = {{"dict_error", last.dict_error},
                      {"support_rate", last.support_rate},
                      {"loss", last.loss}};
    gsae::save_checkpoint((out / (std::string("checkpoint_") + which + ".bin")).string(),
                          {ae, train_cfg.epochs});
  }
  write_json((out / "summary.json").string(), summary);
  write_manifest(out, "compare",
                 config, {"compare.csv", "summary.json", "checkpoint_group.bin",
                          "checkpoint_sparse.bin"});
  std::cout << "compared group vs sparse over " << train_cfg.epochs
            << " epochs\n";
  return 0;
}

int cmd_theory_check(const json& config, const std::filesystem::path& out,
                     std::optional<std::uint64_t> seed_override) {
  const std::string dataset_path =
      need_as<std::string>(config, "config", "dataset");
  const gsae::Dataset ds = gsae::load_dataset(dataset_path);
  const double lambda = need_as<double>(config, "config", "lambda");

  gsae::GroupedDictionary dict;
  const auto ckpt = config.find("checkpoint");
  if (ckpt != config.end() && !ckpt->is_null()) {
    gsae::Checkpoint cp = gsae::load_checkpoint(ckpt->get<std::string>());
    dict = std::move(cp.state.dict);
    if (dict.rows() != ds.dictionary.rows() ||
        !(dict.structure == ds.dictionary.structure)) {
      throw gsae::DimensionError("checkpoint shape does not match dataset");
    }
  } else {
    dict = parse_init(need(config, "config", "init"), "init", ds,
                      seed_override)
               .dict;
  }

  int gamma = 0;
  double b_min = std::numeric_limits<double>::infinity();
  double b_max = 0.0;
  const gsae::GroupStructure& gs = ds.dictionary.structure;
  for (const gsae::GroupSparseCode& code : ds.codes) {
    gamma = std::max(gamma, static_cast<int>(code.support.size()));
    for (const int g : code.support) {
      const double norm =
          code.values.segment(gs.first_column(g), gs.group_size).norm();
      b_min = std::min(b_min, norm);
      b_max = std::max(b_max, norm);
    }
  }
  if (gamma == 0) throw gsae::ConfigError("dataset has no active groups");

  const gsae::ModelBounds bounds =
      gsae::measure_bounds(dict, ds.dictionary, gamma, b_min, b_max);
  json report;
  report["bounds"] = {{"delta", bounds.delta},   {"zeta", bounds.zeta},
                      {"mu_b", bounds.mu_b},     {"gamma", bounds.gamma},
                      {"b_min", bounds.b_min},   {"b_max", bounds.b_max},
                      {"p_g", bounds.p_g()}};
  const auto range = gsae::lambda_range(bounds);
  if (range) {
    report["lambda_range"] = {range->first, range->second};
    report["lambda_in_range"] =
        lambda >= range->first && lambda <= range->second;
  } else {
    report["lambda_range"] = nullptr;
    report["lambda_in_range"] = false;
  }

  if (!ds.noise_snr_db) {
    const gsae::SupportBoundReport sup = gsae::verify_support_bounds(dict, ds);
    report["support_bounds"] = {
        {"delta_hat", sup.delta_hat},
        {"mu_b_hat", sup.mu_b_hat},
        {"active_floor", sup.active_floor},
        {"inactive_ceiling", sup.inactive_ceiling},
        {"active_checks", sup.active_checks},
        {"inactive_checks", sup.inactive_checks},
        {"active_violations", sup.active_violations},
        {"inactive_violations", sup.inactive_violations},
        {"triangle_violations", sup.triangle_violations},
        {"min_active_margin", sup.min_active_margin},
        {"min_inactive_margin", sup.min_inactive_margin}};
  } else {
    report["support_bounds"] = {{"skipped", "dataset is noisy"}};
  }

  const long num_mc = opt_as<long>(config, "config", "num_mc", 0L);
  if (num_mc > 0) {
    gsae::SynthConfig mc_cfg;
    mc_cfg.signal_dim = static_cast<int>(ds.dictionary.rows());
    mc_cfg.structure = gs;
    mc_cfg.active_groups = gamma;
    mc_cfg.num_samples = 1;
    mc_cfg.scale_low = opt_as<double>(config, "config", "scale_low", 4.0);
    mc_cfg.scale_high = opt_as<double>(config, "config", "scale_high", 5.0);
    mc_cfg.snr_db = ds.noise_snr_db;
    mc_cfg.seed = opt_as<std::uint64_t>(config, "config", "mc_seed", 0);
    const gsae::AlignmentReport align =
        gsae::expected_gradient_mc(dict, ds.dictionary, mc_cfg, lambda, num_mc);
    long positive = 0;
    long above_rhs = 0;
    long rhs_defined = 0;
    for (Eigen::Index i = 0; i < align.inner.size(); ++i) {
      if (align.inner(i) > 0.0) ++positive;
      if (!std::isnan(align.alignment_rhs(i))) {
        ++rhs_defined;
        if (align.inner(i) >= align.alignment_rhs(i)) ++above_rhs;
      }
    }
    report["alignment"] = {
        {"num_mc", align.num_mc},
        {"columns", align.inner.size()},
        {"inner_positive", positive},
        {"rhs_defined", rhs_defined},
        {"inner_above_rhs", above_rhs},
        {"min_inner", align.inner.minCoeff()},
        {"mean_inner", align.inner.mean()},
        {"max_se", align.inner_se.maxCoeff()},
        {"epsilon_unit", align.epsilon_unit},
        {"lambda_in_range", align.lambda_in_range}};
  }

  const int contraction_epochs =
      opt_as<int>(config, "config", "contraction_epochs", 0);
  if (contraction_epochs > 0) {
    const double eta = opt_as<double>(config, "config", "eta", 1e-3);
    const gsae::GeometryStats geometry =
        gsae::measure_geometry(dict, ds.dictionary, ds.observations, lambda);
    gsae::AutoencoderState ae;
    ae.dict = dict;
    ae.lambda = lambda;
    ae.prox = gsae::ProxKind::GroupSoftThreshold;
    ae.unroll = 1;
    gsae::TrainConfig tc;
    tc.optimizer = gsae::Optimizer::PlainGd;
    tc.learning_rate = eta;
    tc.epochs = contraction_epochs;
    const std::vector<std::vector<int>> supports = ds.supports();
    gsae::TruthRef truth;
    truth.dictionary = &ds.dictionary;
    truth.supports = &supports;
    const gsae::TrainHistory history =
        gsae::train(ae, ds.observations, tc, truth);
    const gsae::ContractionReport con =
        gsae::contraction_trace(history, bounds, eta, geometry);
    report["contraction"] = {
        {"rho", con.rho},
        {"eta", eta},
        {"eta_max", con.eta_max},
        {"additive_unit", con.additive_unit},
        {"additive_log", con.additive_log},
        {"precondition_lhs", con.precondition_lhs},
        {"precondition_rhs", con.precondition_rhs},
        {"precondition_holds", con.precondition_holds},
        {"alpha_min_nonpositive", con.alpha_min_nonpositive},
        {"max_group_median_ratio", con.per_group_median.maxCoeff()},
        {"flagged_epochs", con.flagged_epochs},
        {"tau_bar", geometry.tau_bar},
        {"alpha_min", geometry.alpha_min},
        {"alpha_max", geometry.alpha_max},
        {"omega_max", geometry.omega_max}};
  }

  write_json((out / "report.json").string(), report);
  write_manifest(out, "theory-check", config, {"report.json"});
  std::cout << "theory report -> " << (out / "report.json").string() << "\n";
  return 0;
}

int cmd_cluster(const json& config, const std::filesystem::path& out,
                std::optional<std::uint64_t> seed_override) {
  const json& data = need(config, "config", "data");
  const std::string kind = need_as<std::string>(data, "data", "kind");
  Eigen::MatrixXd observations;
  std::vector<int> truth_labels;
  if (kind == "dataset") {
    const gsae::Dataset ds =
        gsae::load_dataset(need_as<std::string>(data, "data", "path"));
    observations = ds.observations;
  } else if (kind == "idx") {
    const gsae::IdxImages images =
        gsae::load_idx_images(need_as<std::string>(data, "data", "images"));
    observations = images.pixels;
    const auto labels_path = data.find("labels");
    if (labels_path != data.end() && !labels_path->is_null()) {
      truth_labels = gsae::load_idx_labels(labels_path->get<std::string>());
      if (static_cast<Eigen::Index>(truth_labels.size()) !=
          observations.cols()) {
        throw gsae::DimensionError("image and label counts disagree");
      }
    }
    const int limit = opt_as<int>(data, "data", "limit", 0);
    if (limit > 0 && limit < observations.cols()) {
      observations = observations.leftCols(limit).eval();
      if (!truth_labels.empty()) truth_labels.resize(static_cast<std::size_t>(limit));
    }
  } else {
    throw gsae::ConfigError("data.kind: expected 'dataset' or 'idx'");
  }

  Eigen::MatrixXd features;
  const auto ckpt = config.find("checkpoint");
  if (ckpt != config.end() && !ckpt->is_null()) {
    const gsae::Checkpoint cp = gsae::load_checkpoint(ckpt->get<std::string>());
    if (cp.state.dict.rows() != observations.rows()) {
      throw gsae::DimensionError("checkpoint rows do not match the data");
    }
    features = gsae::batch_encode(cp.state, observations);
  } else {
    features = observations;  // raw representation baseline
  }
  if (opt_as<bool>(config, "config", "nonneg", false)) {
    features = gsae::codes_nonneg_simplex(features);
  }

  const gsae::ClusterConfig cluster_cfg = parse_cluster(
      need(config, "config", "cluster"), "cluster", seed_override);
  const gsae::KmeansResult km = gsae::kmeans(features, cluster_cfg);

  json accuracy;
  accuracy["wcss"] = km.wcss;
  std::vector<int> kmeans_labels(km.labels.data(),
                                 km.labels.data() + km.labels.size());
  if (!truth_labels.empty()) {
    accuracy["kmeans_accuracy"] =
        gsae::clustering_accuracy(kmeans_labels, truth_labels);
  } else {
    accuracy["kmeans_accuracy"] = nullptr;
  }

  std::vector<int> spectral_labels;
  if (opt_as<bool>(config, "config", "spectral", false)) {
    const gsae::SpectralResult sp = gsae::spectral_clustering(features, cluster_cfg);
    spectral_labels.assign(sp.labels.data(), sp.labels.data() + sp.labels.size());
    accuracy["spectral_components"] = sp.num_components;
    accuracy["spectral_disconnected_warning"] = sp.disconnected_warning;
    accuracy["spectral_bandwidth"] = sp.bandwidth;
    if (!truth_labels.empty()) {
      accuracy["spectral_accuracy"] =
          gsae::clustering_accuracy(spectral_labels, truth_labels);
    } else {
      accuracy["spectral_accuracy"] = nullptr;
    }
  }

  {
    std::vector<std::string> cols = {"index", "kmeans"};
    if (!spectral_labels.empty()) cols.push_back("spectral");
    if (!truth_labels.empty()) cols.push_back("truth");
    gsae::CsvWriter csv((out / "labels.csv").string(), cols);
    for (std::size_t i = 0; i < kmeans_labels.size(); ++i) {
      std::vector<std::string> row = {std::to_string(i),
                                      std::to_string(kmeans_labels[i])};
      if (!spectral_labels.empty()) row.push_back(std::to_string(spectral_labels[i]));
      if (!truth_labels.empty()) row.push_back(std::to_string(truth_labels[i]));
      csv.write_row(row);
    }
  }
  write_json((out / "accuracy.json").string(), accuracy);

  std::vector<std::string> outputs = {"labels.csv", "accuracy.json"};
  if (opt_as<bool>(config, "config", "similarity", false)) {
    const std::vector<int>& sort_by =
        truth_labels.empty() ? kmeans_labels : truth_labels;
    const Eigen::MatrixXd sim = gsae::similarity_matrix(features, sort_by);
    gsae::Container c;
    c.arrays.push_back({"similarity", sim});
    c.meta["sorted_by"] = truth_labels.empty() ? "kmeans" : "truth";
    gsae::save_container((out / "similarity.bin").string(), c);
    gsae::save_pgm((out / "similarity.pgm").string(), sim);
    outputs.push_back("similarity.bin");
    outputs.push_back("similarity.pgm");
  }
  write_manifest(out, "cluster", config, outputs);
  std::cout << "clustered " << features.cols() << " points into "
            << cluster_cfg.k << " clusters\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Group-sparse dictionary learning experiments"};
  app.require_subcommand(1);

  struct Common {
    std::string config_path;
    std::string out_dir = ".";
    std::uint64_t seed_value = 0;
    int threads = 0;
  };
  std::map<std::string, Common> commons;
  std::vector<std::string> names = {"synth", "train", "compare", "theory-check",
                                    "cluster"};
  std::map<std::string, CLI::App*> subs;
  const std::map<std::string, std::string> descriptions = {
      {"synth", "generate a dataset from the group-sparse model"},
      {"train", "train an autoencoder on a dataset"},
      {"compare", "train group and sparse autoencoders from a shared start"},
      {"theory-check", "verify recovery and convergence bounds on a dataset"},
      {"cluster", "cluster raw data or encoded representations"}};
  for (const std::string& name : names) {
    CLI::App* sub = app.add_subcommand(name, descriptions.at(name));
    Common& common = commons[name];
    sub->add_option("--config", common.config_path, "JSON config path")
        ->required();
    sub->add_option("--out", common.out_dir, "output directory");
    sub->add_option("--seed", common.seed_value, "seed override");
    sub->add_option("--threads", common.threads, "worker thread count");
    subs[name] = sub;
  }

  CLI11_PARSE(app, argc, argv);

  try {
    for (const std::string& name : names) {
      if (!subs[name]->parsed()) continue;
      Common& common = commons[name];
      std::optional<std::uint64_t> seed_override;
      if (subs[name]->count("--seed") > 0) seed_override = common.seed_value;
      if (common.threads < 0) {
        throw gsae::ConfigError("--threads must be nonnegative");
      }
      gsae::set_thread_count(common.threads);
      std::error_code ec;
      std::filesystem::create_directories(common.out_dir, ec);
      if (ec) {
        throw gsae::IoError(common.out_dir + ": cannot create: " + ec.message());
      }
      const json config = load_json(common.config_path);
      if (name == "synth") {
        return cmd_synth(config, common.out_dir, seed_override);
      }
      if (name == "train") {
        return cmd_train(config, common.out_dir, seed_override);
      }
      if (name == "compare") {
        return cmd_compare(config, common.out_dir, seed_override);
      }
      if (name == "theory-check") {
        return cmd_theory_check(config, common.out_dir, seed_override);
      }
      if (name == "cluster") {
        return cmd_cluster(config, common.out_dir, seed_override);
      }
    }
    std::cerr << "no subcommand selected\n";
    return 2;
  } catch (const gsae::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const gsae::DimensionError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const gsae::ConvergenceError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 3;
  } catch (const gsae::NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 3;
  } catch (const gsae::IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return 4;
  }
}
