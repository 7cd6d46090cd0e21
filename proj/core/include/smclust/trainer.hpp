#pragma once

#include "smclust/cluster.hpp"
#include "smclust/data.hpp"
#include "smclust/graph.hpp"
#include "smclust/losses.hpp"
#include "smclust/nn.hpp"

#include <map>
#include <optional>
#include <set>

namespace smclust {

/// Ablation switches:
///   no_vda              drop the distribution alignment term
///   no_smc              drop the contrastive term (projector stays untrained)
///   no_cfa              keep only the correlation-matrix part of alignment
///   no_cma              keep only the cross-feature part of alignment
///   no_guidance         neighbor graphs shrink to the aligned diagonal
///   all_pairs_views     losses over all view pairs instead of anchor pairs
///   graph_on_projection build neighbor graphs from projections, not latents
///   epoch_graph         build each pair's graph over the whole dataset once
///                       per epoch (batches slice it) instead of per batch
const std::set<std::string>& known_ablations();

struct TrainConfig {
  int d = 30;
  std::vector<int> hidden_dims = {1024, 1024};
  std::vector<int> proj_dims;  // full projector layer dims; empty means {d, d, d}
  int epochs = 500;
  int batch_size = 500;
  double lr = 1e-4;
  double lambda1 = 10.0;
  double lambda2 = 1.0;
  double tau = 1.0;
  std::uint64_t seed = 0;
  std::set<std::string> ablations;
  int eval_every = 0;  // 0 disables interim evaluations
  bool rec_batch_scaling = true;
  int kmeans_restarts = 10;
  int kmeans_max_iter = 300;
  double kmeans_tol = 1e-6;
  int threads = 1;

  bool ablated(const std::string& name) const { return ablations.count(name) > 0; }
  void validate() const;
};

struct TrainLogRow {
  int epoch = 0;
  LossBreakdown losses;       // per-batch means for the epoch
  double aligned_per_batch = 0.0;
  int smc_skipped = 0;        // contrastive rows skipped, summed over batches
  double wall_ms = 0.0;
};

struct TrainedModel {
  TrainConfig config;
  std::vector<MlpNetwork> encoders;
  std::vector<MlpNetwork> decoders;
  MlpNetwork projector;
  std::vector<TrainLogRow> log;
  std::vector<std::pair<int, Metrics>> interim;  // filled when eval_every > 0
};

/// Joint mini-batch training of all networks: reconstruction on every view,
/// distribution alignment on each batch's aligned rows, and graph-guided
/// contrast on the projections, combined into one optimizer step per batch.
/// Batches with fewer than 2 aligned rows skip the alignment term and reuse
/// the pair's last adaptive threshold; before any threshold exists the graph
/// falls back to the aligned diagonal.
TrainedModel train(const MultiViewDataset& ds, const TrainConfig& cfg);

struct PairGraphInfo {
  int view = 0;  // non-anchor view index (0-based)
  std::optional<double> threshold;
  double purity = 0.0;
  SemanticGraph graph;
};

struct EvaluationResult {
  Metrics metrics;
  ClusterResult clusters;
  int k = 0;
  std::uint64_t seed = 0;
  std::vector<Matrix> embeddings;  // normalized projections per view
  FusedRepresentation fused;
  std::vector<PairGraphInfo> graphs;
};

/// Full forward pass, one global neighbor graph per non-anchor view (built
/// with a streaming block product and a threshold from all aligned samples),
/// matched fusion, k-means and external metrics against the anchor labels.
EvaluationResult evaluate(const TrainedModel& model, const MultiViewDataset& ds);

/// Encoder outputs per view for the whole dataset.
std::vector<Matrix> encode_views(const TrainedModel& model, const MultiViewDataset& ds);

/// Maps a named objective variant to its ablation set. Known variants:
/// full, rec_only, rec_vda, rec_smc, plus every ablation switch name.
std::set<std::string> variant_ablations(const std::string& variant);

struct AblationRow {
  std::string variant;
  std::vector<Metrics> runs;
  Metrics mean;
  Metrics stddev;
};

/// Trains and evaluates each variant over n_seeds consecutive seeds
/// (base.seed + r) on the same dataset.
std::vector<AblationRow> run_ablation_suite(const MultiViewDataset& ds, const TrainConfig& base,
                                            const std::vector<std::string>& variants, int n_seeds);

struct SweepRow {
  double eta = 0.0;
  std::vector<Metrics> runs;
  Metrics mean;
  Metrics stddev;
};

/// For every alignment ratio, re-simulates partial alignment on a fully
/// aligned dataset (seeded per run), trains and evaluates.
std::vector<SweepRow> sweep_alignment(const MultiViewDataset& aligned_ds, const TrainConfig& base,
                                      const std::vector<double>& etas, int n_seeds);

struct MatchingComparison {
  Metrics semantic;
  Metrics euclidean;
};

Metrics metrics_mean(const std::vector<Metrics>& runs);
Metrics metrics_stddev(const std::vector<Metrics>& runs, const Metrics& mean);

/// Compares matched-neighbor fusion against a baseline that re-pairs each
/// unaligned anchor row with the nearest unaligned row (Euclidean, per view)
/// and concatenates plainly. Both paths cluster with the same seed.
MatchingComparison compare_matching(const TrainedModel& model, const MultiViewDataset& ds);

/// Flat "key = value" config text; '#' starts a comment. Unknown keys are
/// config errors.
std::map<std::string, std::string> read_config_file(const std::filesystem::path& path);
std::map<std::string, std::string> parse_config_text(const std::string& text,
                                                     const std::string& origin = "<config>");
TrainConfig apply_config_kv(const std::map<std::string, std::string>& kv, TrainConfig base);
std::map<std::string, std::string> config_to_kv(const TrainConfig& cfg);
void write_config_echo(const TrainConfig& cfg, const std::filesystem::path& path);

void write_loss_log(const std::vector<TrainLogRow>& log, const std::filesystem::path& path);

}  // namespace smclust
