#pragma once

#include "smclust/types.hpp"

#include <cstdint>

namespace smclust {

struct ClusterResult {
  IntVector assignments;
  Matrix centers;  // k x d
  double inertia = 0.0;
  int iterations = 0;
  int best_restart = 0;
};

struct KmeansOptions {
  int restarts = 10;
  int max_iter = 300;
  double tol = 1e-6;
  int threads = 1;
};

/// Lloyd's algorithm with k-means++ seeding. Restarts are independent and
/// deterministic in (seed, restart index); the best restart by inertia wins,
/// ties broken by the lower restart index, so the result does not depend on
/// the thread count. Clusters that empty out are reseeded to the point
/// farthest from its assigned center. Assignment ties go to the lowest
/// center index.
ClusterResult kmeans(const Matrix& x, int k, std::uint64_t seed, const KmeansOptions& opts = {});

/// Minimum-cost perfect assignment on a square cost matrix (O(n^3) potentials
/// method). Throws data_error on non-square input, numeric_error on
/// non-finite costs.
struct Assignment {
  IntVector row_to_col;
  double total_cost = 0.0;
};
Assignment hungarian(const Matrix& cost);

/// Clustering accuracy: the best one-to-one cluster-to-class matching is
/// found on the (square zero-padded) confusion matrix via hungarian on
/// negated counts; returns matched count / N.
double acc(const IntVector& pred, const IntVector& truth);

/// Normalized mutual information with arithmetic-mean entropy normalization
/// (natural log). Two single-cluster partitions score 1; when either side
/// has zero entropy and the partitions differ the score is 0.
double nmi(const IntVector& pred, const IntVector& truth);

/// Adjusted Rand index from the pair-counting contingency formula. When the
/// adjustment denominator vanishes (both partitions trivial and equal) the
/// score is 1.
double ari(const IntVector& pred, const IntVector& truth);

struct Metrics {
  double acc = 0.0;
  double nmi = 0.0;
  double ari = 0.0;
};

Metrics clustering_metrics(const IntVector& pred, const IntVector& truth);

}  // namespace smclust
