#pragma once

#include "smclust/checkpoint.hpp"
#include "smclust/trainer.hpp"

#include <filesystem>
#include <optional>

namespace smclust {

/// Exit codes shared by the CLI and the in-process command layer.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;   // selfcheck found a failing check
inline constexpr int kExitConfig = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitNumeric = 4;

/// Every command writes a manifest.json next to its artifacts: the command
/// name, resolved configuration, FNV-1a hashes of the input files, artifact
/// paths, timestamps and the library version.
struct RunManifest {
  std::string command;
  std::map<std::string, std::string> config;
  std::map<std::string, std::string> inputs;  // path -> content hash
  std::vector<std::string> artifacts;
  std::string started;
  std::string finished;
};

std::uint64_t fnv1a64_file(const std::filesystem::path& path);
void write_manifest(const RunManifest& manifest, const std::filesystem::path& path);

struct GenDataOptions {
  int n = 1000;
  int k = 5;
  int views = 2;
  std::vector<int> dims = {20, 15};
  double sep = 4.0;
  double noise = 0.3;
  std::uint64_t seed = 0;
  std::string format = "csv";
  std::filesystem::path out_dir;
};
void cmd_gen_data(const GenDataOptions& opts);

struct TrainOptions {
  std::filesystem::path data_dir;
  double eta = 1.0;
  std::optional<std::uint64_t> align_seed;  // defaults to config.seed
  bool zscore = false;
  TrainConfig config;
  std::filesystem::path out_dir;
};
/// Trains, evaluates, and writes metrics.json, loss_log.csv, graph edge and
/// meta files, checkpoint.bin, config_echo.txt and manifest.json.
EvaluationResult cmd_train(const TrainOptions& opts);

struct EvaluateOptions {
  std::filesystem::path data_dir;
  std::filesystem::path checkpoint;
  double eta = 1.0;
  std::optional<std::uint64_t> align_seed;
  bool zscore = false;
  std::optional<int> threads;
  std::filesystem::path out_dir;
};
EvaluationResult cmd_evaluate(const EvaluateOptions& opts);

struct AblateOptions {
  std::filesystem::path data_dir;
  double eta = 1.0;
  std::optional<std::uint64_t> align_seed;
  bool zscore = false;
  TrainConfig config;
  std::vector<std::string> variants = {"rec_only", "rec_vda", "full"};
  int runs = 5;
  std::filesystem::path out_dir;
};
std::vector<AblationRow> cmd_ablate(const AblateOptions& opts);

struct SweepOptions {
  std::filesystem::path data_dir;
  bool zscore = false;
  TrainConfig config;
  std::vector<double> etas = {0.3, 0.5, 0.7, 1.0};
  int runs = 5;
  std::filesystem::path out_dir;
};
std::vector<SweepRow> cmd_sweep_alignment(const SweepOptions& opts);

struct CompareMatchingOptions {
  std::filesystem::path data_dir;
  double eta = 0.5;
  std::optional<std::uint64_t> align_seed;
  bool zscore = false;
  TrainConfig config;
  int runs = 5;
  std::filesystem::path out_dir;
};
struct MatchingComparisonReport {
  std::vector<MatchingComparison> runs;
  Metrics semantic_mean, semantic_std;
  Metrics euclidean_mean, euclidean_std;
};
MatchingComparisonReport cmd_compare_matching(const CompareMatchingOptions& opts);

struct SelfcheckOptions {
  std::filesystem::path out_dir;
  bool inject_gradient_bug = false;  // test hook: corrupt one analytic gradient
};
struct SelfcheckReport {
  struct Check {
    std::string name;
    double max_err = 0.0;
    bool pass = false;
  };
  std::vector<Check> checks;
  bool all_pass = false;
};
/// Runs the built-in verification battery (gradient checks for every loss,
/// correlation invariants, graph rule fidelity, metric brute-force oracles,
/// assignment-vs-exhaustive) and prints one line per check.
SelfcheckReport cmd_selfcheck(const SelfcheckOptions& opts);

/// Shared loader: dataset directory, optional z-scoring, optional partial
/// alignment simulation (eta < 1).
MultiViewDataset load_command_dataset(const std::filesystem::path& data_dir, double eta,
                                      std::uint64_t align_seed, bool zscore);

void write_metrics_json(const EvaluationResult& eval, const std::filesystem::path& path);

}  // namespace smclust
