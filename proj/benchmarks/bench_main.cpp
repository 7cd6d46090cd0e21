// Micro benchmarks for the numerical hot paths: covariance, graph
// construction, contrastive loss, fusion, k-means, and a full training epoch.
// Run the binary directly; it is not part of the ctest suite.

#include "smclust/cluster.hpp"
#include "smclust/data.hpp"
#include "smclust/graph.hpp"
#include "smclust/losses.hpp"
#include "smclust/stats.hpp"
#include "smclust/trainer.hpp"

#include <benchmark/benchmark.h>

#include <random>

namespace {

using namespace smclust;

Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist(0.0, 1.0);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = dist(rng);
  return m;
}

void bm_cross_cov(benchmark::State& state) {
  const Eigen::Index n = state.range(0);
  const Matrix za = random_matrix(n, 64, 1);
  const Matrix zb = random_matrix(n, 64, 2);
  for (auto _ : state) {
    const CovMatrix c = cross_cov(za, zb);
    benchmark::DoNotOptimize(c.values.data());
  }
  state.SetComplexityN(n);
}
BENCHMARK(bm_cross_cov)->Arg(128)->Arg(512)->Arg(1000)->Complexity(benchmark::oNSquared);

void bm_build_graph_streaming(benchmark::State& state) {
  const Eigen::Index n = state.range(0);
  const Matrix za = random_matrix(n, 64, 3);
  const Matrix zb = random_matrix(n, 64, 4);
  Mask aligned(static_cast<std::size_t>(n), 0);
  for (std::size_t i = 0; i < aligned.size(); i += 2) aligned[i] = 1;
  for (auto _ : state) {
    const SemanticGraph g = build_graph_streaming(za, zb, aligned, 0.2);
    benchmark::DoNotOptimize(g.edge_count());
  }
  state.SetComplexityN(n);
}
BENCHMARK(bm_build_graph_streaming)->Arg(128)->Arg(512)->Arg(1000)->Complexity(benchmark::oNSquared);

void bm_loss_smc(benchmark::State& state) {
  const Eigen::Index n = state.range(0);
  const Matrix ha = l2_normalize_rows(random_matrix(n, 16, 5));
  const Matrix hb = l2_normalize_rows(random_matrix(n, 16, 6));
  const Mask aligned(static_cast<std::size_t>(n), 1);
  const SemanticGraph g = build_graph_streaming(ha, hb, aligned, 0.1);
  for (auto _ : state) {
    const SmcLoss loss = loss_smc(ha, hb, g, aligned, 0.2);
    benchmark::DoNotOptimize(loss.value);
  }
}
BENCHMARK(bm_loss_smc)->Arg(128)->Arg(512);

void bm_fuse(benchmark::State& state) {
  const Eigen::Index n = state.range(0);
  const Matrix ha = l2_normalize_rows(random_matrix(n, 16, 7));
  const Matrix hb = l2_normalize_rows(random_matrix(n, 16, 8));
  const Mask aligned(static_cast<std::size_t>(n), 1);
  const SemanticGraph g = build_graph_streaming(ha, hb, aligned, 0.1);
  for (auto _ : state) {
    const FusedRepresentation fused = fuse({ha, hb}, {g});
    benchmark::DoNotOptimize(fused.fused.data());
  }
}
BENCHMARK(bm_fuse)->Arg(128)->Arg(512);

void bm_kmeans(benchmark::State& state) {
  const Eigen::Index n = state.range(0);
  const Matrix x = random_matrix(n, 32, 9);
  KmeansOptions opts;
  opts.restarts = 4;
  for (auto _ : state) {
    const ClusterResult r = kmeans(x, 5, 42, opts);
    benchmark::DoNotOptimize(r.inertia);
  }
}
BENCHMARK(bm_kmeans)->Arg(256)->Arg(1000)->Unit(benchmark::kMillisecond);

void bm_train_epoch(benchmark::State& state) {
  const MultiViewDataset base = generate_synthetic(500, 5, {20, 15}, 4.0, 0.3, 42);
  const MultiViewDataset ds = apply_partial_alignment(base, 0.5, 7);
  TrainConfig cfg;
  cfg.d = 32;
  cfg.hidden_dims = {64, 64};
  cfg.proj_dims = {32, 32, 16};
  cfg.epochs = 1;
  cfg.batch_size = 128;
  cfg.lr = 5e-4;
  cfg.lambda1 = 100.0;
  cfg.lambda2 = 40.0;
  cfg.tau = 0.2;
  for (auto _ : state) {
    const TrainedModel model = train(ds, cfg);
    benchmark::DoNotOptimize(model.log.back().losses.total);
  }
}
BENCHMARK(bm_train_epoch)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
