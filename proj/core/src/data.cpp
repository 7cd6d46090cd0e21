#include "smclust/data.hpp"

#include "smclust/rng.hpp"

#include <json.hpp>

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

static_assert(std::endian::native == std::endian::little,
              "binary matrix I/O assumes a little-endian host");

namespace smclust {

int MultiViewDataset::class_count() const {
  std::set<int> distinct(labels.begin(), labels.end());
  return static_cast<int>(distinct.size());
}

Eigen::Index MultiViewDataset::aligned_count() const {
  return static_cast<Eigen::Index>(std::count(aligned.begin(), aligned.end(), std::uint8_t{1}));
}

void MultiViewDataset::validate() const {
  if (views.empty()) throw data_error("dataset: no views");
  const auto rows = views[0].rows();
  for (std::size_t v = 0; v < views.size(); ++v)
    if (views[v].rows() != rows)
      throw data_error("dataset: view " + std::to_string(v + 1) + " row count mismatch");
  if (labels.size() != static_cast<std::size_t>(rows)) throw data_error("dataset: label count mismatch");
  if (aligned.size() != static_cast<std::size_t>(rows)) throw data_error("dataset: aligned mask size mismatch");
  if (permutations.size() != views.size()) throw data_error("dataset: permutation count mismatch");
  for (std::size_t v = 0; v < permutations.size(); ++v) {
    if (permutations[v].size() != static_cast<std::size_t>(rows))
      throw data_error("dataset: permutation size mismatch in view " + std::to_string(v + 1));
    Mask seen(static_cast<std::size_t>(rows), 0);
    for (int idx : permutations[v]) {
      if (idx < 0 || idx >= rows || seen[static_cast<std::size_t>(idx)])
        throw data_error("dataset: invalid permutation in view " + std::to_string(v + 1));
      seen[static_cast<std::size_t>(idx)] = 1;
    }
  }
  for (std::size_t i = 0; i < aligned.size(); ++i) {
    if (!aligned[i]) continue;
    for (const auto& perm : permutations)
      if (perm[i] != static_cast<int>(i))
        throw data_error("dataset: aligned sample " + std::to_string(i) + " is not a fixed point");
  }
}

MultiViewDataset generate_synthetic(int n, int k, const std::vector<int>& view_dims, double sep,
                                    double noise_std, std::uint64_t seed) {
  if (n < 1) throw config_error("generate_synthetic: n must be positive");
  if (k < 1 || k > n) throw config_error("generate_synthetic: k must be in [1, n]");
  if (view_dims.empty()) throw config_error("generate_synthetic: need at least one view");
  for (int d : view_dims)
    if (d < 1) throw config_error("generate_synthetic: view dims must be positive");
  if (sep < 0.0 || noise_std < 0.0)
    throw config_error("generate_synthetic: sep and noise_std must be non-negative");

  const int latent_dim = *std::max_element(view_dims.begin(), view_dims.end());
  std::normal_distribution<double> normal(0.0, 1.0);

  auto rng_centers = make_rng(seed, 1);
  Matrix centers(k, latent_dim);
  for (Eigen::Index i = 0; i < centers.rows(); ++i)
    for (Eigen::Index j = 0; j < centers.cols(); ++j) centers(i, j) = sep * normal(rng_centers);

  MultiViewDataset ds;
  ds.labels.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) ds.labels[static_cast<std::size_t>(i)] = i % k;

  auto rng_latent = make_rng(seed, 2);
  Matrix latent(n, latent_dim);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < latent_dim; ++j)
      latent(i, j) = centers(ds.labels[static_cast<std::size_t>(i)], j) + normal(rng_latent);

  const double map_scale = 1.0 / std::sqrt(static_cast<double>(latent_dim));
  for (std::size_t v = 0; v < view_dims.size(); ++v) {
    auto rng_map = make_rng(seed, 10 + v);
    Matrix a(latent_dim, view_dims[v]);
    for (Eigen::Index i = 0; i < a.rows(); ++i)
      for (Eigen::Index j = 0; j < a.cols(); ++j) a(i, j) = map_scale * normal(rng_map);
    Matrix x = (latent * a).array().tanh().matrix();
    if (noise_std > 0.0) {
      auto rng_noise = make_rng(seed, 100 + v);
      for (Eigen::Index i = 0; i < x.rows(); ++i)
        for (Eigen::Index j = 0; j < x.cols(); ++j) x(i, j) += noise_std * normal(rng_noise);
    }
    ds.views.push_back(std::move(x));
  }

  ds.aligned.assign(static_cast<std::size_t>(n), 1);
  IntVector identity(static_cast<std::size_t>(n));
  std::iota(identity.begin(), identity.end(), 0);
  ds.permutations.assign(view_dims.size(), identity);
  return ds;
}

MultiViewDataset apply_partial_alignment(const MultiViewDataset& ds, double eta, std::uint64_t seed) {
  if (eta <= 0.0 || eta > 1.0) throw config_error("apply_partial_alignment: eta must be in (0, 1]");
  ds.validate();
  MultiViewDataset out = ds;
  const auto n = ds.n();
  const auto n_aligned = static_cast<Eigen::Index>(std::floor(eta * static_cast<double>(n)));

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  auto rng_pick = make_rng(seed, 3001);
  std::shuffle(order.begin(), order.end(), rng_pick);

  out.aligned.assign(static_cast<std::size_t>(n), 0);
  for (Eigen::Index i = 0; i < n_aligned; ++i)
    out.aligned[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])] = 1;

  std::vector<Eigen::Index> loose;
  loose.reserve(static_cast<std::size_t>(n - n_aligned));
  for (Eigen::Index i = 0; i < n; ++i)
    if (!out.aligned[static_cast<std::size_t>(i)]) loose.push_back(i);

  for (std::size_t v = 1; v < out.views.size(); ++v) {
    std::vector<Eigen::Index> target = loose;
    auto rng_shuffle = make_rng(seed, 4001 + v);
    std::shuffle(target.begin(), target.end(), rng_shuffle);
    Matrix shuffled = out.views[v];
    IntVector perm = out.permutations[v];
    for (std::size_t u = 0; u < loose.size(); ++u) {
      const Eigen::Index dst = loose[u];
      const Eigen::Index src = target[u];
      shuffled.row(dst) = ds.views[v].row(src);
      perm[static_cast<std::size_t>(dst)] = ds.permutations[v][static_cast<std::size_t>(src)];
    }
    out.views[v] = std::move(shuffled);
    out.permutations[v] = std::move(perm);
  }
  out.validate();
  return out;
}

void zscore_views(MultiViewDataset& ds) {
  for (auto& x : ds.views) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      const double mean = x.col(j).mean();
      const double var = (x.col(j).array() - mean).square().sum() / static_cast<double>(x.rows());
      const double sd = std::sqrt(var);
      if (sd < 1e-12)
        x.col(j).setZero();
      else
        x.col(j) = (x.col(j).array() - mean) / sd;
    }
  }
}

BatchIndexPlan make_batches(Eigen::Index n, Eigen::Index batch, std::uint64_t seed) {
  if (n < 1) throw config_error("make_batches: n must be positive");
  if (batch < 1 || batch > n)
    throw config_error("make_batches: batch size must be in [1, n], got " + std::to_string(batch));
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  auto rng = make_rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  BatchIndexPlan plan;
  for (Eigen::Index start = 0; start < n; start += batch) {
    const auto end = std::min(n, start + batch);
    plan.batches.emplace_back(order.begin() + start, order.begin() + end);
  }
  return plan;
}

Matrix read_matrix(const std::filesystem::path& path) {
  if (path.extension() == ".csv") {
    std::ifstream in(path);
    if (!in) throw data_error("cannot open " + path.string());
    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t cols = 0;
    while (std::getline(in, line)) {
      while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
      if (line.empty()) continue;
      std::vector<double> row;
      const char* ptr = line.data();
      const char* end = line.data() + line.size();
      while (ptr < end) {
        while (ptr < end && *ptr == ' ') ++ptr;
        double value = 0.0;
        auto [next, ec] = std::from_chars(ptr, end, value);
        if (ec != std::errc())
          throw data_error(path.string() + ": non-numeric value in row " + std::to_string(rows.size() + 1));
        row.push_back(value);
        ptr = next;
        if (ptr < end) {
          if (*ptr != ',') throw data_error(path.string() + ": expected ',' in row " + std::to_string(rows.size() + 1));
          ++ptr;
        }
      }
      if (row.empty()) throw data_error(path.string() + ": empty row " + std::to_string(rows.size() + 1));
      if (cols == 0) cols = row.size();
      if (row.size() != cols)
        throw data_error(path.string() + ": ragged row " + std::to_string(rows.size() + 1) + " (" +
                         std::to_string(row.size()) + " vs " + std::to_string(cols) + " columns)");
      rows.push_back(std::move(row));
    }
    if (rows.empty()) throw data_error(path.string() + ": no rows");
    Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols));
    for (std::size_t i = 0; i < rows.size(); ++i)
      for (std::size_t j = 0; j < cols; ++j) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    return m;
  }

  std::ifstream in(path, std::ios::binary);
  if (!in) throw data_error("cannot open " + path.string());
  std::uint64_t rows = 0;
  std::uint64_t cols = 0;
  in.read(reinterpret_cast<char*>(&rows), sizeof(rows));
  in.read(reinterpret_cast<char*>(&cols), sizeof(cols));
  if (!in) throw data_error(path.string() + ": truncated header");
  if (rows == 0 || cols == 0) throw data_error(path.string() + ": empty matrix");
  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  std::vector<double> buffer(cols);
  for (std::uint64_t i = 0; i < rows; ++i) {
    in.read(reinterpret_cast<char*>(buffer.data()), static_cast<std::streamsize>(cols * sizeof(double)));
    if (!in) throw data_error(path.string() + ": truncated data at row " + std::to_string(i));
    for (std::uint64_t j = 0; j < cols; ++j)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = buffer[j];
  }
  return m;
}

void write_matrix_csv(const Matrix& m, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw data_error("cannot open " + path.string());
  out.precision(17);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) out << ',';
      out << m(i, j);
    }
    out << '\n';
  }
  if (!out.good()) throw data_error("write failed for " + path.string());
}

void write_matrix_binary(const Matrix& m, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw data_error("cannot open " + path.string());
  const std::uint64_t rows = static_cast<std::uint64_t>(m.rows());
  const std::uint64_t cols = static_cast<std::uint64_t>(m.cols());
  out.write(reinterpret_cast<const char*>(&rows), sizeof(rows));
  out.write(reinterpret_cast<const char*>(&cols), sizeof(cols));
  std::vector<double> buffer(cols);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) buffer[static_cast<std::size_t>(j)] = m(i, j);
    out.write(reinterpret_cast<const char*>(buffer.data()), static_cast<std::streamsize>(cols * sizeof(double)));
  }
  if (!out.good()) throw data_error("write failed for " + path.string());
}

IntVector read_labels(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw data_error("cannot open " + path.string());
  IntVector labels;
  std::string line;
  while (std::getline(in, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
    if (line.empty()) continue;
    int value = 0;
    auto [next, ec] = std::from_chars(line.data(), line.data() + line.size(), value);
    if (ec != std::errc() || next != line.data() + line.size())
      throw data_error(path.string() + ": invalid label '" + line + "'");
    labels.push_back(value);
  }
  if (labels.empty()) throw data_error(path.string() + ": no labels");
  return labels;
}

void write_labels(const IntVector& labels, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw data_error("cannot open " + path.string());
  for (int l : labels) out << l << '\n';
  if (!out.good()) throw data_error("write failed for " + path.string());
}

MultiViewDataset load_dataset(const std::vector<std::filesystem::path>& view_paths,
                              const std::filesystem::path& label_path) {
  if (view_paths.empty()) throw data_error("load_dataset: no view files");
  MultiViewDataset ds;
  for (const auto& p : view_paths) ds.views.push_back(read_matrix(p));
  ds.labels = read_labels(label_path);
  const auto n = ds.views[0].rows();
  for (std::size_t v = 0; v < ds.views.size(); ++v)
    if (ds.views[v].rows() != n)
      throw data_error("load_dataset: " + view_paths[v].string() + " has " +
                       std::to_string(ds.views[v].rows()) + " rows, expected " + std::to_string(n));
  if (ds.labels.size() != static_cast<std::size_t>(n))
    throw data_error("load_dataset: label count " + std::to_string(ds.labels.size()) +
                     " does not match row count " + std::to_string(n));
  ds.aligned.assign(static_cast<std::size_t>(n), 1);
  IntVector identity(static_cast<std::size_t>(n));
  std::iota(identity.begin(), identity.end(), 0);
  ds.permutations.assign(ds.views.size(), identity);
  ds.validate();
  return ds;
}

MultiViewDataset load_dataset_dir(const std::filesystem::path& dir) {
  const auto manifest_path = dir / "dataset.json";
  std::ifstream in(manifest_path);
  if (!in) throw data_error("cannot open " + manifest_path.string());
  nlohmann::json manifest;
  try {
    in >> manifest;
  } catch (const nlohmann::json::exception& e) {
    throw data_error(manifest_path.string() + ": " + e.what());
  }
  std::vector<std::filesystem::path> views;
  for (const auto& f : manifest.at("views")) views.push_back(dir / f.get<std::string>());
  return load_dataset(views, dir / manifest.at("labels").get<std::string>());
}

std::vector<std::filesystem::path> write_dataset(const MultiViewDataset& ds,
                                                 const std::filesystem::path& dir,
                                                 const std::string& format) {
  if (format != "csv" && format != "bin") throw config_error("write_dataset: format must be csv or bin");
  ds.validate();
  std::filesystem::create_directories(dir);
  std::vector<std::filesystem::path> written;
  nlohmann::json manifest;
  manifest["n"] = ds.n();
  manifest["k"] = ds.class_count();
  manifest["view_count"] = ds.view_count();
  manifest["format"] = format;
  std::vector<std::string> view_files;
  std::vector<int> dims;
  for (std::size_t v = 0; v < ds.views.size(); ++v) {
    const std::string name = "view" + std::to_string(v + 1) + (format == "csv" ? ".csv" : ".bin");
    const auto path = dir / name;
    if (format == "csv")
      write_matrix_csv(ds.views[v], path);
    else
      write_matrix_binary(ds.views[v], path);
    view_files.push_back(name);
    dims.push_back(static_cast<int>(ds.views[v].cols()));
    written.push_back(path);
  }
  manifest["views"] = view_files;
  manifest["dims"] = dims;
  manifest["labels"] = "labels.txt";
  write_labels(ds.labels, dir / "labels.txt");
  written.push_back(dir / "labels.txt");

  std::ofstream out(dir / "dataset.json");
  if (!out) throw data_error("cannot open " + (dir / "dataset.json").string());
  out << manifest.dump(2) << '\n';
  written.push_back(dir / "dataset.json");
  return written;
}

}  // namespace smclust
