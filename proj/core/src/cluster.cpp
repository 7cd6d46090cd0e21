#include "smclust/cluster.hpp"

#include "smclust/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <random>
#include <thread>

namespace smclust {

namespace {

struct RestartOutcome {
  IntVector assignments;
  Matrix centers;
  double inertia = std::numeric_limits<double>::infinity();
  int iterations = 0;
};

Eigen::Index sample_weighted(const Vector& weights, double total, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  const double target = dist(rng) * total;
  double cum = 0.0;
  for (Eigen::Index i = 0; i < weights.size(); ++i) {
    cum += weights(i);
    if (target < cum) return i;
  }
  return weights.size() - 1;
}

Matrix seed_centers(const Matrix& x, int k, std::mt19937_64& rng) {
  const auto n = x.rows();
  Matrix centers(k, x.cols());
  std::uniform_int_distribution<Eigen::Index> uni(0, n - 1);
  centers.row(0) = x.row(uni(rng));
  Vector d2 = (x.rowwise() - centers.row(0)).rowwise().squaredNorm();
  for (int c = 1; c < k; ++c) {
    const double total = d2.sum();
    Eigen::Index pick;
    if (total <= 0.0) {
      pick = uni(rng);
    } else {
      pick = sample_weighted(d2, total, rng);
    }
    centers.row(c) = x.row(pick);
    if (c + 1 < k) d2 = d2.cwiseMin((x.rowwise() - centers.row(c)).rowwise().squaredNorm());
  }
  return centers;
}

double assign_points(const Matrix& x, const Matrix& centers, IntVector& assignments) {
  const auto n = x.rows();
  const auto k = centers.rows();
  // ||x - c||^2 = ||x||^2 - 2 x.c + ||c||^2; the argmin ignores ||x||^2 but
  // the inertia needs the full expression.
  const Vector xn = x.rowwise().squaredNorm();
  const Vector cn = centers.rowwise().squaredNorm();
  const Matrix dots = x * centers.transpose();
  double inertia = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    int best = 0;
    double best_val = cn(0) - 2.0 * dots(i, 0);
    for (Eigen::Index c = 1; c < k; ++c) {
      const double val = cn(c) - 2.0 * dots(i, c);
      if (val < best_val) {
        best_val = val;
        best = static_cast<int>(c);
      }
    }
    assignments[static_cast<std::size_t>(i)] = best;
    inertia += std::max(0.0, xn(i) + best_val);
  }
  return inertia;
}

RestartOutcome run_lloyd(const Matrix& x, int k, std::uint64_t restart_seed, int max_iter,
                         double tol) {
  auto rng = make_rng(restart_seed);
  const auto n = x.rows();
  RestartOutcome out;
  out.centers = seed_centers(x, k, rng);
  out.assignments.assign(static_cast<std::size_t>(n), 0);

  double prev_inertia = std::numeric_limits<double>::infinity();
  for (int it = 0; it < max_iter; ++it) {
    const double inertia = assign_points(x, out.centers, out.assignments);
    if (inertia > prev_inertia * (1.0 + 1e-12) + 1e-9)
      throw std::logic_error("kmeans: inertia increased across Lloyd iterations");
    prev_inertia = inertia;
    out.inertia = inertia;
    out.iterations = it + 1;

    Matrix new_centers = Matrix::Zero(k, x.cols());
    std::vector<Eigen::Index> counts(static_cast<std::size_t>(k), 0);
    for (Eigen::Index i = 0; i < n; ++i) {
      new_centers.row(out.assignments[static_cast<std::size_t>(i)]) += x.row(i);
      ++counts[static_cast<std::size_t>(out.assignments[static_cast<std::size_t>(i)])];
    }
    for (int c = 0; c < k; ++c) {
      if (counts[static_cast<std::size_t>(c)] > 0)
        new_centers.row(c) /= static_cast<double>(counts[static_cast<std::size_t>(c)]);
      else
        new_centers.row(c) = out.centers.row(c);
    }

    // Reseed empty clusters to the point farthest from its assigned center.
    std::vector<std::uint8_t> taken(static_cast<std::size_t>(n), 0);
    for (int c = 0; c < k; ++c) {
      if (counts[static_cast<std::size_t>(c)] > 0) continue;
      Eigen::Index far_idx = -1;
      double far_d = -1.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        if (taken[static_cast<std::size_t>(i)]) continue;
        const double d =
            (x.row(i) - new_centers.row(out.assignments[static_cast<std::size_t>(i)])).squaredNorm();
        if (d > far_d) {
          far_d = d;
          far_idx = i;
        }
      }
      if (far_idx >= 0) {
        new_centers.row(c) = x.row(far_idx);
        taken[static_cast<std::size_t>(far_idx)] = 1;
      }
    }

    const double shift = (new_centers - out.centers).rowwise().norm().maxCoeff();
    out.centers = new_centers;
    if (shift < tol) break;
  }
  out.inertia = assign_points(x, out.centers, out.assignments);
  return out;
}

std::pair<IntVector, int> compact_labels(const IntVector& labels) {
  std::map<int, int> remap;
  for (int l : labels) remap.emplace(l, 0);
  int next = 0;
  for (auto& [key, idx] : remap) idx = next++;
  IntVector out(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) out[i] = remap[labels[i]];
  return {out, next};
}

Matrix contingency(const IntVector& pred, const IntVector& truth, int kp, int kt) {
  Matrix c = Matrix::Zero(kp, kt);
  for (std::size_t i = 0; i < pred.size(); ++i) c(pred[i], truth[i]) += 1.0;
  return c;
}

void check_label_pair(const IntVector& pred, const IntVector& truth, const char* fn) {
  if (pred.size() != truth.size()) throw data_error(std::string(fn) + ": label vector size mismatch");
  if (pred.empty()) throw data_error(std::string(fn) + ": empty label vectors");
}

double comb2(double n) { return n * (n - 1.0) / 2.0; }

}  // namespace

ClusterResult kmeans(const Matrix& x, int k, std::uint64_t seed, const KmeansOptions& opts) {
  const auto n = x.rows();
  if (n == 0) throw data_error("kmeans: empty input");
  if (k < 1 || k > n) throw config_error("kmeans: k must be in [1, n], got " + std::to_string(k));
  if (opts.restarts < 1 || opts.max_iter < 1) throw config_error("kmeans: restarts and max_iter must be positive");
  if (opts.tol < 0.0) throw config_error("kmeans: tol must be non-negative");
  require_finite(x, "kmeans input");

  std::vector<RestartOutcome> outcomes(static_cast<std::size_t>(opts.restarts));
  auto run_range = [&](int begin, int end) {
    for (int r = begin; r < end; ++r)
      outcomes[static_cast<std::size_t>(r)] =
          run_lloyd(x, k, mix_seed(seed, static_cast<std::uint64_t>(r)), opts.max_iter, opts.tol);
  };

  const int threads = std::max(1, std::min(opts.threads, opts.restarts));
  if (threads == 1) {
    run_range(0, opts.restarts);
  } else {
    std::vector<std::thread> pool;
    const int per = (opts.restarts + threads - 1) / threads;
    for (int t = 0; t < threads; ++t) {
      const int begin = t * per;
      const int end = std::min(opts.restarts, begin + per);
      if (begin < end) pool.emplace_back(run_range, begin, end);
    }
    for (auto& th : pool) th.join();
  }

  int best = 0;
  for (int r = 1; r < opts.restarts; ++r)
    if (outcomes[static_cast<std::size_t>(r)].inertia < outcomes[static_cast<std::size_t>(best)].inertia)
      best = r;

  ClusterResult result;
  result.assignments = std::move(outcomes[static_cast<std::size_t>(best)].assignments);
  result.centers = std::move(outcomes[static_cast<std::size_t>(best)].centers);
  result.inertia = outcomes[static_cast<std::size_t>(best)].inertia;
  result.iterations = outcomes[static_cast<std::size_t>(best)].iterations;
  result.best_restart = best;
  return result;
}

Assignment hungarian(const Matrix& cost) {
  const auto n = cost.rows();
  if (n != cost.cols()) throw data_error("hungarian: cost matrix must be square");
  if (n == 0) throw data_error("hungarian: empty cost matrix");
  require_finite(cost, "hungarian cost matrix");

  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(static_cast<std::size_t>(n) + 1, 0.0);
  std::vector<double> v(static_cast<std::size_t>(n) + 1, 0.0);
  std::vector<int> p(static_cast<std::size_t>(n) + 1, 0);
  std::vector<int> way(static_cast<std::size_t>(n) + 1, 0);

  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(static_cast<std::size_t>(n) + 1, inf);
    std::vector<std::uint8_t> used(static_cast<std::size_t>(n) + 1, 0);
    do {
      used[static_cast<std::size_t>(j0)] = 1;
      const int i0 = p[static_cast<std::size_t>(j0)];
      int j1 = -1;
      double delta = inf;
      for (int j = 1; j <= n; ++j) {
        if (used[static_cast<std::size_t>(j)]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[static_cast<std::size_t>(i0)] - v[static_cast<std::size_t>(j)];
        if (cur < minv[static_cast<std::size_t>(j)]) {
          minv[static_cast<std::size_t>(j)] = cur;
          way[static_cast<std::size_t>(j)] = j0;
        }
        if (minv[static_cast<std::size_t>(j)] < delta) {
          delta = minv[static_cast<std::size_t>(j)];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[static_cast<std::size_t>(j)]) {
          u[static_cast<std::size_t>(p[static_cast<std::size_t>(j)])] += delta;
          v[static_cast<std::size_t>(j)] -= delta;
        } else {
          minv[static_cast<std::size_t>(j)] -= delta;
        }
      }
      j0 = j1;
    } while (p[static_cast<std::size_t>(j0)] != 0);
    do {
      const int j1 = way[static_cast<std::size_t>(j0)];
      p[static_cast<std::size_t>(j0)] = p[static_cast<std::size_t>(j1)];
      j0 = j1;
    } while (j0);
  }

  Assignment out;
  out.row_to_col.assign(static_cast<std::size_t>(n), -1);
  for (int j = 1; j <= n; ++j)
    if (p[static_cast<std::size_t>(j)] > 0) out.row_to_col[static_cast<std::size_t>(p[static_cast<std::size_t>(j)] - 1)] = j - 1;
  for (int i = 0; i < n; ++i) out.total_cost += cost(i, out.row_to_col[static_cast<std::size_t>(i)]);
  return out;
}

double acc(const IntVector& pred, const IntVector& truth) {
  check_label_pair(pred, truth, "acc");
  auto [p, kp] = compact_labels(pred);
  auto [t, kt] = compact_labels(truth);
  const int m = std::max(kp, kt);
  Matrix counts = Matrix::Zero(m, m);
  counts.topLeftCorner(kp, kt) = contingency(p, t, kp, kt);
  const Assignment a = hungarian(-counts);
  double matched = 0.0;
  for (int i = 0; i < m; ++i) matched += counts(i, a.row_to_col[static_cast<std::size_t>(i)]);
  return matched / static_cast<double>(pred.size());
}

double nmi(const IntVector& pred, const IntVector& truth) {
  check_label_pair(pred, truth, "nmi");
  auto [p, kp] = compact_labels(pred);
  auto [t, kt] = compact_labels(truth);
  const double n = static_cast<double>(p.size());
  const Matrix c = contingency(p, t, kp, kt);
  const Vector rows = c.rowwise().sum();
  const Vector cols = c.colwise().sum();

  double hp = 0.0;
  for (Eigen::Index i = 0; i < rows.size(); ++i)
    if (rows(i) > 0) hp -= rows(i) / n * std::log(rows(i) / n);
  double ht = 0.0;
  for (Eigen::Index j = 0; j < cols.size(); ++j)
    if (cols(j) > 0) ht -= cols(j) / n * std::log(cols(j) / n);

  if (hp == 0.0 && ht == 0.0) return 1.0;  // both single-cluster, identical partitions
  if (hp == 0.0 || ht == 0.0) return 0.0;

  double mi = 0.0;
  for (Eigen::Index i = 0; i < c.rows(); ++i)
    for (Eigen::Index j = 0; j < c.cols(); ++j)
      if (c(i, j) > 0) mi += c(i, j) / n * std::log(c(i, j) * n / (rows(i) * cols(j)));
  return mi / (0.5 * (hp + ht));
}

double ari(const IntVector& pred, const IntVector& truth) {
  check_label_pair(pred, truth, "ari");
  auto [p, kp] = compact_labels(pred);
  auto [t, kt] = compact_labels(truth);
  const Matrix c = contingency(p, t, kp, kt);
  const Vector rows = c.rowwise().sum();
  const Vector cols = c.colwise().sum();

  double sum_ij = 0.0;
  for (Eigen::Index i = 0; i < c.rows(); ++i)
    for (Eigen::Index j = 0; j < c.cols(); ++j) sum_ij += comb2(c(i, j));
  double sum_a = 0.0;
  for (Eigen::Index i = 0; i < rows.size(); ++i) sum_a += comb2(rows(i));
  double sum_b = 0.0;
  for (Eigen::Index j = 0; j < cols.size(); ++j) sum_b += comb2(cols(j));

  const double pairs = comb2(static_cast<double>(p.size()));
  const double expected = sum_a * sum_b / pairs;
  const double max_index = 0.5 * (sum_a + sum_b);
  const double denom = max_index - expected;
  if (denom == 0.0) return 1.0;  // both partitions trivial, necessarily equal
  return (sum_ij - expected) / denom;
}

Metrics clustering_metrics(const IntVector& pred, const IntVector& truth) {
  return Metrics{acc(pred, truth), nmi(pred, truth), ari(pred, truth)};
}

}  // namespace smclust
