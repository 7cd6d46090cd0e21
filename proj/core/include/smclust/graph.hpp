#pragma once

#include "smclust/stats.hpp"
#include "smclust/types.hpp"

#include <filesystem>
#include <utility>

namespace smclust {

/// Sparse row-major semantic neighbor graph between an anchor view and one
/// other view. Entry rules for position (i, j) given correlations C and
/// threshold T:
///   - i == j and sample i is aligned: weight exactly 1,
///   - C(i, j) > T (strict): weight C(i, j),
///   - otherwise: no entry.
/// An unaligned diagonal position follows the threshold rule like any other
/// entry. Stored entries are kept sorted by column index.
struct SemanticGraph {
  Eigen::Index n = 0;
  double threshold = 0.0;
  std::vector<std::vector<std::pair<int, double>>> rows;

  std::size_t edge_count() const {
    std::size_t e = 0;
    for (const auto& r : rows) e += r.size();
    return e;
  }
};

/// Builds the neighbor graph from a square correlation matrix and the aligned
/// mask. Throws data_error on non-square input or mask size mismatch.
SemanticGraph build_graph(const CovMatrix& cross, const Mask& aligned, double threshold);

/// Builds the same graph without materializing the dense n x n correlation
/// matrix: standardizes once, then forms row blocks of at most `block_rows`
/// rows. Produces entries identical to cross_cov + build_graph.
SemanticGraph build_graph_streaming(const Matrix& za, const Matrix& zb, const Mask& aligned,
                                    double threshold, Eigen::Index block_rows = 256);

/// Weighted combination of the other view's rows for anchor row i:
/// sum over stored (k, w) of w * hb.row(k). Empty rows give the zero vector.
Vector matched_representation(const SemanticGraph& g, const Matrix& hb, Eigen::Index i);

/// Concatenated multi-view representation. Anchor rows pass through as-is;
/// every other view contributes its matched vector re-normalized to unit
/// length. Rows whose matched vector is degenerate (no neighbors, or zero
/// norm) stay zero in that block and are flagged.
struct FusedRepresentation {
  Matrix fused;
  std::vector<Mask> fallback;  // one mask per non-anchor view
};

FusedRepresentation fuse(const std::vector<Matrix>& hs, const std::vector<SemanticGraph>& graphs);

/// Weight-weighted fraction of stored edges whose endpoints carry the same
/// class label. A graph with zero total weight scores 1.0.
double graph_purity(const SemanticGraph& g, const IntVector& labels_a, const IntVector& labels_b);

/// Writes stored edges as "i,k,weight" CSV plus a JSON sidecar carrying the
/// threshold, edge count and purity.
void export_graph(const SemanticGraph& g, double purity, const std::filesystem::path& csv_path,
                  const std::filesystem::path& meta_path);

}  // namespace smclust
