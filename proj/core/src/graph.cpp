#include "smclust/graph.hpp"

#include <json.hpp>

#include <fstream>

namespace smclust {

namespace {

void apply_rules(SemanticGraph& g, const Matrix& block, Eigen::Index row0, const Mask& aligned,
                 double threshold) {
  for (Eigen::Index r = 0; r < block.rows(); ++r) {
    const Eigen::Index i = row0 + r;
    auto& row = g.rows[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < block.cols(); ++j) {
      if (i == j && aligned[static_cast<std::size_t>(i)]) {
        row.emplace_back(static_cast<int>(j), 1.0);
      } else if (block(r, j) > threshold) {
        row.emplace_back(static_cast<int>(j), block(r, j));
      }
    }
  }
}

}  // namespace

SemanticGraph build_graph(const CovMatrix& cross, const Mask& aligned, double threshold) {
  const auto n = cross.values.rows();
  if (n != cross.values.cols()) throw data_error("build_graph: correlation matrix must be square");
  if (aligned.size() != static_cast<std::size_t>(n))
    throw data_error("build_graph: aligned mask size mismatch");
  SemanticGraph g;
  g.n = n;
  g.threshold = threshold;
  g.rows.resize(static_cast<std::size_t>(n));
  apply_rules(g, cross.values, 0, aligned, threshold);
  return g;
}

SemanticGraph build_graph_streaming(const Matrix& za, const Matrix& zb, const Mask& aligned,
                                    double threshold, Eigen::Index block_rows) {
  if (za.rows() != zb.rows())
    throw data_error("build_graph_streaming: row count mismatch between views");
  if (block_rows < 1) throw config_error("build_graph_streaming: block_rows must be positive");
  const auto n = za.rows();
  if (aligned.size() != static_cast<std::size_t>(n))
    throw data_error("build_graph_streaming: aligned mask size mismatch");

  const StandardizedRows ua = standardize_rows(za);
  const StandardizedRows ub = standardize_rows(zb);
  const double dm1 = static_cast<double>(za.cols() - 1);

  SemanticGraph g;
  g.n = n;
  g.threshold = threshold;
  g.rows.resize(static_cast<std::size_t>(n));
  for (Eigen::Index row0 = 0; row0 < n; row0 += block_rows) {
    const Eigen::Index rows = std::min(block_rows, n - row0);
    const Matrix block = ua.u.middleRows(row0, rows) * ub.u.transpose() / dm1;
    apply_rules(g, block, row0, aligned, threshold);
  }
  return g;
}

Vector matched_representation(const SemanticGraph& g, const Matrix& hb, Eigen::Index i) {
  if (hb.rows() != g.n) throw data_error("matched_representation: row count mismatch");
  if (i < 0 || i >= g.n) throw data_error("matched_representation: row index out of range");
  Vector out = Vector::Zero(hb.cols());
  for (const auto& [k, w] : g.rows[static_cast<std::size_t>(i)]) out += w * hb.row(k).transpose();
  return out;
}

FusedRepresentation fuse(const std::vector<Matrix>& hs, const std::vector<SemanticGraph>& graphs) {
  if (hs.empty()) throw data_error("fuse: no views");
  if (graphs.size() != hs.size() - 1)
    throw data_error("fuse: expected one graph per non-anchor view");
  const auto n = hs[0].rows();
  const auto d = hs[0].cols();
  for (const auto& h : hs)
    if (h.rows() != n || h.cols() != d) throw data_error("fuse: view shape mismatch");
  for (const auto& g : graphs)
    if (g.n != n) throw data_error("fuse: graph size mismatch");

  FusedRepresentation out;
  out.fused.resize(n, d * static_cast<Eigen::Index>(hs.size()));
  out.fused.leftCols(d) = hs[0];
  out.fallback.resize(hs.size() - 1, Mask(static_cast<std::size_t>(n), 0));
  for (std::size_t v = 1; v < hs.size(); ++v) {
    const SemanticGraph& g = graphs[v - 1];
    auto block = out.fused.middleCols(static_cast<Eigen::Index>(v) * d, d);
    for (Eigen::Index i = 0; i < n; ++i) {
      Vector m = matched_representation(g, hs[v], i);
      const double norm = m.norm();
      if (g.rows[static_cast<std::size_t>(i)].empty() || norm < 1e-12) {
        block.row(i).setZero();
        out.fallback[v - 1][static_cast<std::size_t>(i)] = 1;
      } else {
        block.row(i) = m.transpose() / norm;
      }
    }
  }
  return out;
}

double graph_purity(const SemanticGraph& g, const IntVector& labels_a, const IntVector& labels_b) {
  if (labels_a.size() != static_cast<std::size_t>(g.n) ||
      labels_b.size() != static_cast<std::size_t>(g.n))
    throw data_error("graph_purity: label vector size mismatch");
  double total = 0.0;
  double matching = 0.0;
  for (std::size_t i = 0; i < g.rows.size(); ++i) {
    for (const auto& [k, w] : g.rows[i]) {
      total += w;
      if (labels_a[i] == labels_b[static_cast<std::size_t>(k)]) matching += w;
    }
  }
  if (total == 0.0) return 1.0;
  return matching / total;
}

void export_graph(const SemanticGraph& g, double purity, const std::filesystem::path& csv_path,
                  const std::filesystem::path& meta_path) {
  std::ofstream csv(csv_path);
  if (!csv) throw data_error("export_graph: cannot open " + csv_path.string());
  csv.precision(17);
  for (std::size_t i = 0; i < g.rows.size(); ++i)
    for (const auto& [k, w] : g.rows[i]) csv << i << ',' << k << ',' << w << '\n';
  if (!csv.good()) throw data_error("export_graph: write failed for " + csv_path.string());

  nlohmann::json meta;
  meta["threshold"] = g.threshold;
  meta["edge_count"] = g.edge_count();
  meta["purity"] = purity;
  meta["nodes"] = g.n;
  std::ofstream out(meta_path);
  if (!out) throw data_error("export_graph: cannot open " + meta_path.string());
  out << meta.dump(2) << '\n';
  if (!out.good()) throw data_error("export_graph: write failed for " + meta_path.string());
}

}  // namespace smclust
