// Microbenchmarks for the inner loops: shrinkage, iterative coding, gradient
// evaluation, and k-means. Run with --benchmark_filter=<regex> to restrict.

#include <benchmark/benchmark.h>

#include <Eigen/Dense>

#include "gsae/autoencoder.hpp"
#include "gsae/cluster.hpp"
#include "gsae/prox.hpp"
#include "gsae/rng.hpp"
#include "gsae/synth.hpp"

namespace {

gsae::Dataset make_dataset(int signal_dim, int num_groups, int group_size,
                           int active, int num_samples) {
  gsae::SynthConfig cfg;
  cfg.signal_dim = signal_dim;
  cfg.structure = {num_groups, group_size};
  cfg.active_groups = active;
  cfg.num_samples = num_samples;
  cfg.seed = 7;
  return gsae::generate(cfg);
}

void bm_group_prox(benchmark::State& state) {
  const auto m = static_cast<int>(state.range(0));
  gsae::Rng rng(1);
  Eigen::VectorXd v(m);
  for (int i = 0; i < m; ++i) v(i) = rng.normal();
  const gsae::GroupStructure gs{m / 2, 2};
  for (auto _ : state) {
    benchmark::DoNotOptimize(gsae::group_prox(v, 0.4, gs));
  }
  state.SetItemsProcessed(state.iterations() * m);
}
BENCHMARK(bm_group_prox)->Arg(128)->Arg(1024)->Arg(8192);

void bm_batch_ista(benchmark::State& state) {
  const auto iters = static_cast<int>(state.range(0));
  const gsae::Dataset ds = make_dataset(100, 64, 2, 3, 256);
  gsae::IstaConfig cfg;
  cfg.iterations = iters;
  cfg.lambda = 2.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(gsae::batch_ista(
        ds.observations, ds.dictionary, cfg, gsae::ProxKind::GroupSoftThreshold));
  }
  state.SetItemsProcessed(state.iterations() * ds.observations.cols());
}
BENCHMARK(bm_batch_ista)->Arg(1)->Arg(5)->Arg(15);

void bm_batch_gradient(benchmark::State& state) {
  const auto unroll = static_cast<int>(state.range(0));
  const gsae::Dataset ds = make_dataset(100, 64, 2, 3, 256);
  gsae::AutoencoderState ae{ds.dictionary, 2.0,
                            gsae::ProxKind::GroupSoftThreshold,
                            static_cast<int>(unroll), {}};
  for (auto _ : state) {
    benchmark::DoNotOptimize(gsae::batch_gradient(ae, ds.observations));
  }
  state.SetItemsProcessed(state.iterations() * ds.observations.cols());
}
BENCHMARK(bm_batch_gradient)->Arg(1)->Arg(5)->Arg(15);

void bm_kmeans(benchmark::State& state) {
  const auto n = static_cast<int>(state.range(0));
  gsae::Rng rng(2);
  Eigen::MatrixXd x(32, n);
  for (int j = 0; j < n; ++j) {
    const double shift = static_cast<double>(j % 10);
    for (int i = 0; i < 32; ++i) x(i, j) = rng.normal() + shift;
  }
  gsae::ClusterConfig cfg;
  cfg.k = 10;
  cfg.kmeans_restarts = 3;
  for (auto _ : state) {
    benchmark::DoNotOptimize(gsae::kmeans(x, cfg));
  }
  state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(bm_kmeans)->Arg(500)->Arg(2000);

}  // namespace

BENCHMARK_MAIN();
