#pragma once

#include "smclust/types.hpp"

#include <cstdint>
#include <filesystem>

namespace smclust {

/// Multi-view sample collection. View 0 is the anchor: its rows stay in
/// ground-truth order and `labels[i]` belongs to anchor row i. For every view
/// `permutations[v][i]` names the anchor-order sample stored at row i of that
/// view (identity for the anchor). `aligned[i]` marks samples whose rows
/// correspond across all views.
struct MultiViewDataset {
  std::vector<Matrix> views;
  IntVector labels;
  Mask aligned;
  std::vector<IntVector> permutations;

  Eigen::Index n() const { return views.empty() ? 0 : views[0].rows(); }
  int view_count() const { return static_cast<int>(views.size()); }
  int class_count() const;
  Eigen::Index aligned_count() const;

  /// Ground-truth label of row i in view v.
  int row_label(int v, Eigen::Index i) const {
    return labels[static_cast<std::size_t>(permutations[static_cast<std::size_t>(v)][static_cast<std::size_t>(i)])];
  }

  void validate() const;
};

/// Gaussian cluster centers in a shared latent space (dimension
/// max(view_dims)), one latent sample per row, then a per-view random linear
/// map squashed through tanh plus additive Gaussian observation noise.
/// Labels are balanced (first n mod k classes get one extra sample) and the
/// result is fully aligned. Deterministic in the seed.
MultiViewDataset generate_synthetic(int n, int k, const std::vector<int>& view_dims, double sep,
                                    double noise_std, std::uint64_t seed);

/// Keeps a uniformly chosen floor(eta * n) subset aligned and shuffles the
/// remaining rows of every non-anchor view among themselves (a derangement is
/// not enforced). Updates the mask and permutations. eta must lie in (0, 1].
MultiViewDataset apply_partial_alignment(const MultiViewDataset& ds, double eta, std::uint64_t seed);

/// Column-wise z-scoring per view (population statistics over rows); columns
/// with std below 1e-12 become zero.
void zscore_views(MultiViewDataset& ds);

/// Shuffled sample indices partitioned into ceil(n / batch) batches.
struct BatchIndexPlan {
  std::vector<std::vector<int>> batches;
};
BatchIndexPlan make_batches(Eigen::Index n, Eigen::Index batch, std::uint64_t seed);

/// Reads one view matrix. ".csv" files are header-less comma-separated rows;
/// anything else is raw binary: two little-endian uint64 (rows, cols)
/// followed by row-major little-endian float64 values.
Matrix read_matrix(const std::filesystem::path& path);
void write_matrix_csv(const Matrix& m, const std::filesystem::path& path);
void write_matrix_binary(const Matrix& m, const std::filesystem::path& path);

IntVector read_labels(const std::filesystem::path& path);
void write_labels(const IntVector& labels, const std::filesystem::path& path);

/// Loads view matrices plus a label file into a fully aligned dataset.
/// Throws data_error on unreadable files or inconsistent row counts.
MultiViewDataset load_dataset(const std::vector<std::filesystem::path>& view_paths,
                              const std::filesystem::path& label_path);

/// Loads a dataset directory written by write_dataset (dataset.json manifest).
MultiViewDataset load_dataset_dir(const std::filesystem::path& dir);

/// Writes view files (view1.csv ... or .bin), labels.txt and dataset.json
/// into `dir`; returns the list of files written.
std::vector<std::filesystem::path> write_dataset(const MultiViewDataset& ds,
                                                 const std::filesystem::path& dir,
                                                 const std::string& format = "csv");

}  // namespace smclust
