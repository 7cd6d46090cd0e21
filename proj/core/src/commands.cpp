#include "smclust/commands.hpp"

#include "smclust/rng.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <numeric>
#include <random>
#include <sstream>

namespace smclust {

namespace {

std::string iso_utc_now() {
  const std::time_t tt = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&tt, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string hash_hex(std::uint64_t h) {
  std::ostringstream os;
  os << "fnv1a64:" << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

void add_input(RunManifest& m, const std::filesystem::path& path) {
  m.inputs[path.string()] = hash_hex(fnv1a64_file(path));
}

void add_dataset_inputs(RunManifest& m, const std::filesystem::path& dir) {
  const auto manifest_path = dir / "dataset.json";
  add_input(m, manifest_path);
  std::ifstream in(manifest_path);
  nlohmann::json manifest;
  in >> manifest;
  for (const auto& f : manifest.at("views")) add_input(m, dir / f.get<std::string>());
  add_input(m, dir / manifest.at("labels").get<std::string>());
}

void export_evaluation_graphs(const EvaluationResult& eval, const std::filesystem::path& out_dir,
                              std::vector<std::string>& artifacts) {
  for (std::size_t p = 0; p < eval.graphs.size(); ++p) {
    const auto& info = eval.graphs[p];
    const std::string suffix = p == 0 ? "" : "_view" + std::to_string(info.view + 1);
    const auto edges = out_dir / ("graph_edges" + suffix + ".csv");
    const auto meta = out_dir / ("graph_meta" + suffix + ".json");
    export_graph(info.graph, info.purity, edges, meta);
    artifacts.push_back(edges.filename().string());
    artifacts.push_back(meta.filename().string());
  }
}

void print_metrics(const std::string& what, const Metrics& m) {
  std::cout << what << ": acc=" << m.acc << " nmi=" << m.nmi << " ari=" << m.ari << '\n';
}

std::string csv_num(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

// ---------------------------------------------------------------------------
// selfcheck battery
// ---------------------------------------------------------------------------

Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> normal(0.0, scale);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = normal(rng);
  return m;
}

struct CheckContext {
  SelfcheckReport& report;
  bool inject_bug = false;

  void record(const std::string& name, double max_err, double tol) {
    SelfcheckReport::Check c;
    c.name = name;
    c.max_err = max_err;
    c.pass = max_err <= tol;
    std::cout << (c.pass ? "[ok]   " : "[FAIL] ") << name << "  max_err=" << max_err
              << " tol=" << tol << '\n';
    report.checks.push_back(std::move(c));
  }
};

void check_gradients(CheckContext& ctx) {
  auto rng = make_rng(424242);
  const Eigen::Index batch = 10;
  const int dx_a = 7, dx_b = 5, d = 6;
  const Matrix xa = random_matrix(batch, dx_a, rng);
  const Matrix xb = random_matrix(batch, dx_b, rng);

  MlpNetwork enc_a("enc_a", {dx_a, 8, d}, {Activation::relu, Activation::identity}, 11);
  MlpNetwork enc_b("enc_b", {dx_b, 8, d}, {Activation::relu, Activation::identity}, 12);
  MlpNetwork dec_a("dec_a", {d, 8, dx_a}, {Activation::relu, Activation::identity}, 13);
  MlpNetwork proj("proj", {d, d, d}, {Activation::relu, Activation::identity}, 14);
  Mask aligned(static_cast<std::size_t>(batch), 1);
  aligned[3] = 0;
  aligned[7] = 0;

  // Reconstruction, gradients through both coder stacks.
  {
    auto loss = [&](MlpNetwork&) {
      return loss_rec({xa}, {dec_a.forward(enc_a.forward(xa))}).value;
    };
    auto grad_enc = [&](MlpNetwork&) {
      const Matrix z = enc_a.forward(xa);
      const Matrix xhat = dec_a.forward(z);
      const RecLoss rec = loss_rec({xa}, {xhat});
      return enc_a.backward(dec_a.backward(rec.grad_xhat[0]).dinput);
    };
    auto grad_dec = [&](MlpNetwork&) {
      const Matrix z = enc_a.forward(xa);
      const Matrix xhat = dec_a.forward(z);
      const RecLoss rec = loss_rec({xa}, {xhat});
      Gradients g = dec_a.backward(rec.grad_xhat[0]);
      if (ctx.inject_bug) g.dW[0] = -g.dW[0];
      return g;
    };
    ctx.record("grad/rec encoder", grad_check(loss, grad_enc, enc_a, 1e-4, 1).max_rel_err, 1e-4);
    ctx.record("grad/rec decoder", grad_check(loss, grad_dec, dec_a, 1e-4, 2).max_rel_err, 1e-4);
  }

  // Distribution alignment parts through both encoders.
  for (const auto& [name, use_cfa, use_cma] :
       {std::tuple<const char*, bool, bool>{"cfa", true, false},
        std::tuple<const char*, bool, bool>{"cma", false, true},
        std::tuple<const char*, bool, bool>{"vda", true, true}}) {
    auto loss = [&, use_cfa = use_cfa, use_cma = use_cma](MlpNetwork&) {
      return loss_vda(enc_a.forward(xa), enc_b.forward(xb), use_cfa, use_cma).value;
    };
    auto grad_a = [&, use_cfa = use_cfa, use_cma = use_cma](MlpNetwork&) {
      const Matrix za = enc_a.forward(xa);
      const Matrix zb = enc_b.forward(xb);
      const VdaLoss v = loss_vda(za, zb, use_cfa, use_cma);
      return enc_a.backward(v.grad_za);
    };
    auto grad_b = [&, use_cfa = use_cfa, use_cma = use_cma](MlpNetwork&) {
      const Matrix za = enc_a.forward(xa);
      const Matrix zb = enc_b.forward(xb);
      const VdaLoss v = loss_vda(za, zb, use_cfa, use_cma);
      return enc_b.backward(v.grad_zb);
    };
    ctx.record(std::string("grad/") + name + " encoder_a",
               grad_check(loss, grad_a, enc_a, 1e-4, 3).max_rel_err, 1e-4);
    ctx.record(std::string("grad/") + name + " encoder_b",
               grad_check(loss, grad_b, enc_b, 1e-4, 4).max_rel_err, 1e-4);
  }

  // Contrastive term through encoder, projector and the row normalization,
  // with the neighbor graph frozen at the starting embeddings.
  {
    const Matrix za0 = enc_a.forward(xa);
    const Matrix zb0 = enc_b.forward(xb);
    const SemanticGraph omega =
        build_graph(cross_cov(za0, zb0), aligned, adaptive_threshold(cross_cov(za0, zb0)) * 0.5);
    const double tau = 0.7;

    auto smc_value = [&]() {
      const Matrix ha = l2_normalize_rows(proj.forward(enc_a.forward(xa)));
      const Matrix hb = l2_normalize_rows(proj.forward(enc_b.forward(xb)));
      return loss_smc(ha, hb, omega, aligned, tau).value;
    };
    auto loss = [&](MlpNetwork&) { return smc_value(); };
    auto grads_all = [&]() {
      const Matrix za = enc_a.forward(xa);
      const Matrix zb = enc_b.forward(xb);
      Matrix stacked(2 * batch, d);
      stacked.topRows(batch) = za;
      stacked.bottomRows(batch) = zb;
      const Matrix h_raw = proj.forward(stacked);
      const RowNormCache na = l2_normalize_rows_cached(h_raw.topRows(batch));
      const RowNormCache nb = l2_normalize_rows_cached(h_raw.bottomRows(batch));
      const SmcLoss smc = loss_smc(na.y, nb.y, omega, aligned, tau);
      Matrix dh_raw(2 * batch, d);
      dh_raw.topRows(batch) = l2_normalize_rows_backward(na, smc.grad_ha);
      dh_raw.bottomRows(batch) = l2_normalize_rows_backward(nb, smc.grad_hb);
      const Gradients dproj = proj.backward(dh_raw);
      return std::tuple<Gradients, Gradients, Gradients>(
          enc_a.backward(dproj.dinput.topRows(batch)), enc_b.backward(dproj.dinput.bottomRows(batch)),
          dproj);
    };
    auto grad_enc_a = [&](MlpNetwork&) { return std::get<0>(grads_all()); };
    auto grad_proj = [&](MlpNetwork&) { return std::get<2>(grads_all()); };
    ctx.record("grad/smc encoder_a", grad_check(loss, grad_enc_a, enc_a, 1e-4, 5).max_rel_err, 1e-4);
    ctx.record("grad/smc projector", grad_check(loss, grad_proj, proj, 1e-4, 6).max_rel_err, 1e-4);
  }
}

void check_correlation_invariants(CheckContext& ctx) {
  auto rng = make_rng(777);
  double max_err = 0.0;
  double max_batch_err = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const Matrix za = random_matrix(10, 6, rng);
    const Matrix zb = random_matrix(10, 6, rng);
    const CovMatrix c = cross_cov(za, zb);
    for (Eigen::Index i = 0; i < 10; ++i) {
      max_err = std::max(max_err, std::abs(pearson(za.row(i), za.row(i)) - 1.0));
      for (Eigen::Index j = 0; j < 10; ++j) {
        const double r = pearson(za.row(i), zb.row(j));
        max_err = std::max(max_err, std::max(0.0, std::abs(r) - 1.0));
        max_batch_err = std::max(max_batch_err, std::abs(c.values(i, j) - r));
        const Vector scaled = (2.5 * za.row(i).transpose().array() + 3.0).matrix();
        max_err = std::max(max_err, std::abs(pearson(scaled, zb.row(j)) - r));
      }
    }
  }
  ctx.record("cov/pearson invariants", max_err, 1e-9);
  ctx.record("cov/batched equals elementwise", max_batch_err, 1e-12);
}

void check_threshold(CheckContext& ctx) {
  Vector diag(3);
  diag << 0.6, 0.8, 1.0;
  const double t = adaptive_threshold_from_diag(diag);
  double err = std::abs(t - 0.6);
  Vector low(2);
  low << 0.1, 0.9;
  err = std::max(err, std::abs(adaptive_threshold_from_diag(low) - 0.0));
  Vector single(1);
  single << 0.42;
  err = std::max(err, std::abs(adaptive_threshold_from_diag(single) - 0.42));
  ctx.record("cov/adaptive threshold", err, 1e-12);
}

void check_graph_rules(CheckContext& ctx) {
  auto rng = make_rng(990);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const Eigen::Index n = 4 + static_cast<Eigen::Index>(uni(rng) * 8);
    Matrix c(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j) c(i, j) = 2.0 * uni(rng) - 1.0;
    Mask aligned(static_cast<std::size_t>(n));
    for (auto& a : aligned) a = uni(rng) < 0.6 ? 1 : 0;
    const double threshold = uni(rng);

    CovMatrix cov;
    cov.values = c;
    const SemanticGraph g = build_graph(cov, aligned, threshold);

    // Literal rule-by-rule reference.
    for (Eigen::Index i = 0; i < n; ++i) {
      std::vector<std::pair<int, double>> expected;
      for (Eigen::Index j = 0; j < n; ++j) {
        if (i == j && aligned[static_cast<std::size_t>(i)])
          expected.emplace_back(static_cast<int>(j), 1.0);
        else if (c(i, j) > threshold)
          expected.emplace_back(static_cast<int>(j), c(i, j));
      }
      const auto& got = g.rows[static_cast<std::size_t>(i)];
      if (got.size() != expected.size()) {
        worst = 1.0;
        continue;
      }
      for (std::size_t e = 0; e < expected.size(); ++e) {
        if (got[e].first != expected[e].first) worst = 1.0;
        worst = std::max(worst, std::abs(got[e].second - expected[e].second));
      }
    }
  }
  ctx.record("graph/entry rules", worst, 0.0);
}

double brute_force_acc(const IntVector& pred, const IntVector& truth, int k) {
  std::vector<int> perm(static_cast<std::size_t>(k));
  std::iota(perm.begin(), perm.end(), 0);
  int best = 0;
  do {
    int hits = 0;
    for (std::size_t i = 0; i < pred.size(); ++i)
      if (perm[static_cast<std::size_t>(pred[i])] == truth[i]) ++hits;
    best = std::max(best, hits);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return static_cast<double>(best) / static_cast<double>(pred.size());
}

void check_metric_oracles(CheckContext& ctx) {
  auto rng = make_rng(5150);
  std::uniform_int_distribution<int> pick_n(2, 8);
  std::uniform_int_distribution<int> pick_label(0, 3);

  double acc_err = 0.0;
  double ari_err = 0.0;
  for (int trial = 0; trial < 300; ++trial) {
    const int n = pick_n(rng);
    IntVector pred(static_cast<std::size_t>(n)), truth(static_cast<std::size_t>(n));
    for (auto& v : pred) v = pick_label(rng);
    for (auto& v : truth) v = pick_label(rng);
    acc_err = std::max(acc_err, std::abs(acc(pred, truth) - brute_force_acc(pred, truth, 4)));

    // Pair-type identity for the adjusted Rand index.
    double a = 0, b = 0, c = 0, d = 0;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) {
        const bool sp = pred[static_cast<std::size_t>(i)] == pred[static_cast<std::size_t>(j)];
        const bool st = truth[static_cast<std::size_t>(i)] == truth[static_cast<std::size_t>(j)];
        if (sp && st) ++a;
        else if (sp) ++b;
        else if (st) ++c;
        else ++d;
      }
    const double denom = (a + b) * (b + d) + (a + c) * (c + d);
    const double expected = denom == 0.0 ? 1.0 : 2.0 * (a * d - b * c) / denom;
    ari_err = std::max(ari_err, std::abs(ari(pred, truth) - expected));
  }
  ctx.record("metrics/acc vs brute force", acc_err, 1e-12);
  ctx.record("metrics/ari pair-type identity", ari_err, 1e-12);

  double nmi_err = std::abs(nmi({0, 0, 1, 1}, {1, 1, 0, 0}) - 1.0);
  nmi_err = std::max(nmi_err, std::abs(nmi({0, 0, 1, 1}, {0, 1, 0, 1}) - 0.0));
  ctx.record("metrics/nmi known values", nmi_err, 1e-12);
}

void check_hungarian(CheckContext& ctx) {
  auto rng = make_rng(31337);
  std::uniform_real_distribution<double> uni(-5.0, 5.0);
  double err = 0.0;
  for (int trial = 0; trial < 60; ++trial) {
    const int n = 3 + trial % 4;  // 3..6
    Matrix cost(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j) cost(i, j) = uni(rng);
    const Assignment got = hungarian(cost);

    std::vector<int> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), 0);
    double best = std::numeric_limits<double>::infinity();
    do {
      double total = 0.0;
      for (int i = 0; i < n; ++i) total += cost(i, perm[static_cast<std::size_t>(i)]);
      best = std::min(best, total);
    } while (std::next_permutation(perm.begin(), perm.end()));
    err = std::max(err, std::abs(got.total_cost - best));
  }
  ctx.record("metrics/assignment vs exhaustive", err, 1e-9);
}

void check_contrastive_scalar(CheckContext& ctx) {
  Matrix h(2, 2);
  h << 1, 0, 0, 1;
  SemanticGraph omega;
  omega.n = 2;
  omega.rows = {{{0, 1.0}, {1, 0.5}}, {{0, 0.5}, {1, 1.0}}};
  const Mask aligned = {1, 1};
  const SmcLoss got = loss_smc(h, h, omega, aligned, 1.0);
  const double e = std::exp(1.0);
  const double expected = -std::log((e + 0.5) / (e + 1.0));
  double err = std::abs(got.value - expected);
  if (got.skipped_rows != 0) err = 1.0;
  ctx.record("losses/contrastive worked example", err, 1e-12);
}

void check_breakdown(CheckContext& ctx) {
  auto rng = make_rng(808);
  std::uniform_real_distribution<double> uni(0.0, 3.0);
  double err = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const double rec = uni(rng), cfa = uni(rng), cma = uni(rng), smc = uni(rng);
    const double l1 = uni(rng), l2 = uni(rng);
    const LossBreakdown b = loss_total(rec, cfa, cma, smc, l1, l2, 1.0);
    err = std::max(err, std::abs(b.vda - (cfa + cma)));
    err = std::max(err, std::abs(b.total - (rec + l1 * b.vda + l2 * smc)));
  }
  ctx.record("losses/breakdown composition", err, 1e-10);
}

}  // namespace

std::uint64_t fnv1a64_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw data_error("cannot open " + path.string() + " for hashing");
  std::uint64_t h = 14695981039346656037ULL;
  char buf[65536];
  while (in) {
    in.read(buf, sizeof(buf));
    const std::streamsize got = in.gcount();
    for (std::streamsize i = 0; i < got; ++i) {
      h ^= static_cast<std::uint8_t>(buf[i]);
      h *= 1099511628211ULL;
    }
  }
  return h;
}

void write_manifest(const RunManifest& manifest, const std::filesystem::path& path) {
  nlohmann::json j;
  j["command"] = manifest.command;
  j["version"] = kVersion;
  j["started"] = manifest.started;
  j["finished"] = manifest.finished;
  j["config"] = manifest.config;
  j["inputs"] = manifest.inputs;
  j["artifacts"] = manifest.artifacts;
  std::ofstream out(path);
  if (!out) throw data_error("cannot open " + path.string());
  out << j.dump(2) << '\n';
  if (!out.good()) throw data_error("write failed for " + path.string());
}

MultiViewDataset load_command_dataset(const std::filesystem::path& data_dir, double eta,
                                      std::uint64_t align_seed, bool zscore) {
  if (eta <= 0.0 || eta > 1.0) throw config_error("eta must be in (0, 1]");
  MultiViewDataset ds = load_dataset_dir(data_dir);
  if (zscore) zscore_views(ds);
  if (eta < 1.0) ds = apply_partial_alignment(ds, eta, align_seed);
  return ds;
}

void write_metrics_json(const EvaluationResult& eval, const std::filesystem::path& path) {
  nlohmann::json j;
  j["acc"] = eval.metrics.acc;
  j["nmi"] = eval.metrics.nmi;
  j["ari"] = eval.metrics.ari;
  j["inertia"] = eval.clusters.inertia;
  j["k"] = eval.k;
  j["seed"] = eval.seed;
  std::ofstream out(path);
  if (!out) throw data_error("cannot open " + path.string());
  out << j.dump(2) << '\n';
  if (!out.good()) throw data_error("write failed for " + path.string());
}

void cmd_gen_data(const GenDataOptions& opts) {
  if (opts.out_dir.empty()) throw config_error("gen-data: --out is required");
  if (static_cast<int>(opts.dims.size()) != opts.views)
    throw config_error("gen-data: got " + std::to_string(opts.dims.size()) + " dims for " +
                       std::to_string(opts.views) + " views");
  RunManifest manifest;
  manifest.command = "gen-data";
  manifest.started = iso_utc_now();

  const MultiViewDataset ds =
      generate_synthetic(opts.n, opts.k, opts.dims, opts.sep, opts.noise, opts.seed);
  const auto files = write_dataset(ds, opts.out_dir, opts.format);
  for (const auto& f : files) manifest.artifacts.push_back(f.filename().string());

  manifest.config["n"] = std::to_string(opts.n);
  manifest.config["k"] = std::to_string(opts.k);
  manifest.config["views"] = std::to_string(opts.views);
  std::string dims;
  for (std::size_t i = 0; i < opts.dims.size(); ++i) {
    if (i) dims += ",";
    dims += std::to_string(opts.dims[i]);
  }
  manifest.config["dims"] = dims;
  manifest.config["sep"] = csv_num(opts.sep);
  manifest.config["noise"] = csv_num(opts.noise);
  manifest.config["seed"] = std::to_string(opts.seed);
  manifest.config["format"] = opts.format;
  manifest.finished = iso_utc_now();
  manifest.artifacts.push_back("manifest.json");
  write_manifest(manifest, opts.out_dir / "manifest.json");
  std::cout << "gen-data: wrote " << ds.view_count() << " views, n=" << ds.n() << ", k="
            << ds.class_count() << " to " << opts.out_dir.string() << '\n';
}

EvaluationResult cmd_train(const TrainOptions& opts) {
  if (opts.out_dir.empty()) throw config_error("train: --out is required");
  opts.config.validate();
  RunManifest manifest;
  manifest.command = "train";
  manifest.started = iso_utc_now();
  add_dataset_inputs(manifest, opts.data_dir);

  const std::uint64_t align_seed = opts.align_seed.value_or(opts.config.seed);
  const MultiViewDataset ds = load_command_dataset(opts.data_dir, opts.eta, align_seed, opts.zscore);

  const TrainedModel model = train(ds, opts.config);
  const EvaluationResult eval = evaluate(model, ds);

  std::filesystem::create_directories(opts.out_dir);
  write_metrics_json(eval, opts.out_dir / "metrics.json");
  write_loss_log(model.log, opts.out_dir / "loss_log.csv");
  save_checkpoint(model, opts.out_dir / "checkpoint.bin");
  write_config_echo(model.config, opts.out_dir / "config_echo.txt");
  manifest.artifacts = {"metrics.json", "loss_log.csv", "checkpoint.bin", "config_echo.txt"};
  export_evaluation_graphs(eval, opts.out_dir, manifest.artifacts);

  manifest.config = config_to_kv(opts.config);
  manifest.config["data_dir"] = opts.data_dir.string();
  manifest.config["eta"] = csv_num(opts.eta);
  manifest.config["align_seed"] = std::to_string(align_seed);
  manifest.config["zscore"] = opts.zscore ? "true" : "false";
  manifest.finished = iso_utc_now();
  manifest.artifacts.push_back("manifest.json");
  write_manifest(manifest, opts.out_dir / "manifest.json");

  for (const auto& [epoch, metrics] : model.interim)
    std::cout << "epoch " << epoch << ": acc=" << metrics.acc << " nmi=" << metrics.nmi
              << " ari=" << metrics.ari << '\n';
  print_metrics("train", eval.metrics);
  return eval;
}

EvaluationResult cmd_evaluate(const EvaluateOptions& opts) {
  if (opts.out_dir.empty()) throw config_error("evaluate: --out is required");
  RunManifest manifest;
  manifest.command = "evaluate";
  manifest.started = iso_utc_now();
  add_dataset_inputs(manifest, opts.data_dir);
  add_input(manifest, opts.checkpoint);

  TrainedModel model = load_checkpoint(opts.checkpoint);
  if (opts.threads) model.config.threads = *opts.threads;
  const std::uint64_t align_seed = opts.align_seed.value_or(model.config.seed);
  const MultiViewDataset ds = load_command_dataset(opts.data_dir, opts.eta, align_seed, opts.zscore);
  const EvaluationResult eval = evaluate(model, ds);

  std::filesystem::create_directories(opts.out_dir);
  write_metrics_json(eval, opts.out_dir / "metrics.json");
  manifest.artifacts = {"metrics.json"};
  export_evaluation_graphs(eval, opts.out_dir, manifest.artifacts);

  manifest.config = config_to_kv(model.config);
  manifest.config["data_dir"] = opts.data_dir.string();
  manifest.config["checkpoint"] = opts.checkpoint.string();
  manifest.config["eta"] = csv_num(opts.eta);
  manifest.config["align_seed"] = std::to_string(align_seed);
  manifest.config["zscore"] = opts.zscore ? "true" : "false";
  manifest.finished = iso_utc_now();
  manifest.artifacts.push_back("manifest.json");
  write_manifest(manifest, opts.out_dir / "manifest.json");
  print_metrics("evaluate", eval.metrics);
  return eval;
}

std::vector<AblationRow> cmd_ablate(const AblateOptions& opts) {
  if (opts.out_dir.empty()) throw config_error("ablate: --out is required");
  opts.config.validate();
  RunManifest manifest;
  manifest.command = "ablate";
  manifest.started = iso_utc_now();
  add_dataset_inputs(manifest, opts.data_dir);

  const std::uint64_t align_seed = opts.align_seed.value_or(opts.config.seed);
  const MultiViewDataset ds = load_command_dataset(opts.data_dir, opts.eta, align_seed, opts.zscore);
  const auto rows = run_ablation_suite(ds, opts.config, opts.variants, opts.runs);

  std::filesystem::create_directories(opts.out_dir);
  {
    std::ofstream csv(opts.out_dir / "ablation.csv");
    if (!csv) throw data_error("cannot open ablation.csv");
    csv << "variant,acc_mean,acc_std,nmi_mean,nmi_std,ari_mean,ari_std\n";
    for (const auto& row : rows)
      csv << row.variant << ',' << csv_num(row.mean.acc) << ',' << csv_num(row.stddev.acc) << ','
          << csv_num(row.mean.nmi) << ',' << csv_num(row.stddev.nmi) << ',' << csv_num(row.mean.ari)
          << ',' << csv_num(row.stddev.ari) << '\n';
  }
  {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& row : rows) {
      nlohmann::json r;
      r["variant"] = row.variant;
      r["acc_mean"] = row.mean.acc;
      r["acc_std"] = row.stddev.acc;
      r["nmi_mean"] = row.mean.nmi;
      r["nmi_std"] = row.stddev.nmi;
      r["ari_mean"] = row.mean.ari;
      r["ari_std"] = row.stddev.ari;
      nlohmann::json runs = nlohmann::json::array();
      for (const auto& m : row.runs) runs.push_back({{"acc", m.acc}, {"nmi", m.nmi}, {"ari", m.ari}});
      r["runs"] = runs;
      j.push_back(r);
    }
    std::ofstream out(opts.out_dir / "ablation.json");
    out << j.dump(2) << '\n';
  }

  manifest.config = config_to_kv(opts.config);
  manifest.config["data_dir"] = opts.data_dir.string();
  manifest.config["eta"] = csv_num(opts.eta);
  manifest.config["align_seed"] = std::to_string(align_seed);
  manifest.config["runs"] = std::to_string(opts.runs);
  std::string variants;
  for (std::size_t i = 0; i < opts.variants.size(); ++i) {
    if (i) variants += ",";
    variants += opts.variants[i];
  }
  manifest.config["variants"] = variants;
  manifest.artifacts = {"ablation.csv", "ablation.json", "manifest.json"};
  manifest.finished = iso_utc_now();
  write_manifest(manifest, opts.out_dir / "manifest.json");

  for (const auto& row : rows) print_metrics("ablate " + row.variant, row.mean);
  return rows;
}

std::vector<SweepRow> cmd_sweep_alignment(const SweepOptions& opts) {
  if (opts.out_dir.empty()) throw config_error("sweep-alignment: --out is required");
  opts.config.validate();
  RunManifest manifest;
  manifest.command = "sweep-alignment";
  manifest.started = iso_utc_now();
  add_dataset_inputs(manifest, opts.data_dir);

  MultiViewDataset ds = load_dataset_dir(opts.data_dir);
  if (opts.zscore) zscore_views(ds);
  const auto rows = sweep_alignment(ds, opts.config, opts.etas, opts.runs);

  std::filesystem::create_directories(opts.out_dir);
  {
    std::ofstream csv(opts.out_dir / "sweep.csv");
    if (!csv) throw data_error("cannot open sweep.csv");
    csv << "eta,metric,mean,std\n";
    for (const auto& row : rows) {
      csv << csv_num(row.eta) << ",acc," << csv_num(row.mean.acc) << ',' << csv_num(row.stddev.acc) << '\n';
      csv << csv_num(row.eta) << ",nmi," << csv_num(row.mean.nmi) << ',' << csv_num(row.stddev.nmi) << '\n';
      csv << csv_num(row.eta) << ",ari," << csv_num(row.mean.ari) << ',' << csv_num(row.stddev.ari) << '\n';
    }
  }
  {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& row : rows) {
      nlohmann::json r;
      r["eta"] = row.eta;
      r["acc_mean"] = row.mean.acc;
      r["acc_std"] = row.stddev.acc;
      r["nmi_mean"] = row.mean.nmi;
      r["nmi_std"] = row.stddev.nmi;
      r["ari_mean"] = row.mean.ari;
      r["ari_std"] = row.stddev.ari;
      nlohmann::json runs = nlohmann::json::array();
      for (const auto& m : row.runs) runs.push_back({{"acc", m.acc}, {"nmi", m.nmi}, {"ari", m.ari}});
      r["runs"] = runs;
      j.push_back(r);
    }
    std::ofstream out(opts.out_dir / "sweep.json");
    out << j.dump(2) << '\n';
  }

  manifest.config = config_to_kv(opts.config);
  manifest.config["data_dir"] = opts.data_dir.string();
  std::string etas;
  for (std::size_t i = 0; i < opts.etas.size(); ++i) {
    if (i) etas += ",";
    etas += csv_num(opts.etas[i]);
  }
  manifest.config["etas"] = etas;
  manifest.config["runs"] = std::to_string(opts.runs);
  manifest.artifacts = {"sweep.csv", "sweep.json", "manifest.json"};
  manifest.finished = iso_utc_now();
  write_manifest(manifest, opts.out_dir / "manifest.json");

  for (const auto& row : rows) {
    std::ostringstream label;
    label << "sweep eta=" << row.eta;
    print_metrics(label.str(), row.mean);
  }
  return rows;
}

MatchingComparisonReport cmd_compare_matching(const CompareMatchingOptions& opts) {
  if (opts.out_dir.empty()) throw config_error("compare-matching: --out is required");
  opts.config.validate();
  if (opts.runs < 1) throw config_error("compare-matching: runs must be positive");
  RunManifest manifest;
  manifest.command = "compare-matching";
  manifest.started = iso_utc_now();
  add_dataset_inputs(manifest, opts.data_dir);

  const std::uint64_t align_seed = opts.align_seed.value_or(opts.config.seed);
  const MultiViewDataset ds = load_command_dataset(opts.data_dir, opts.eta, align_seed, opts.zscore);

  MatchingComparisonReport report;
  std::vector<Metrics> semantic, euclidean;
  for (int r = 0; r < opts.runs; ++r) {
    TrainConfig cfg = opts.config;
    cfg.seed = opts.config.seed + static_cast<std::uint64_t>(r);
    const TrainedModel model = train(ds, cfg);
    const MatchingComparison cmp = compare_matching(model, ds);
    report.runs.push_back(cmp);
    semantic.push_back(cmp.semantic);
    euclidean.push_back(cmp.euclidean);
  }
  report.semantic_mean = metrics_mean(semantic);
  report.semantic_std = metrics_stddev(semantic, report.semantic_mean);
  report.euclidean_mean = metrics_mean(euclidean);
  report.euclidean_std = metrics_stddev(euclidean, report.euclidean_mean);

  std::filesystem::create_directories(opts.out_dir);
  {
    std::ofstream csv(opts.out_dir / "compare_matching.csv");
    if (!csv) throw data_error("cannot open compare_matching.csv");
    csv << "method,acc_mean,acc_std,nmi_mean,nmi_std,ari_mean,ari_std\n";
    csv << "semantic_matching," << csv_num(report.semantic_mean.acc) << ',' << csv_num(report.semantic_std.acc)
        << ',' << csv_num(report.semantic_mean.nmi) << ',' << csv_num(report.semantic_std.nmi) << ','
        << csv_num(report.semantic_mean.ari) << ',' << csv_num(report.semantic_std.ari) << '\n';
    csv << "euclidean_repair," << csv_num(report.euclidean_mean.acc) << ',' << csv_num(report.euclidean_std.acc)
        << ',' << csv_num(report.euclidean_mean.nmi) << ',' << csv_num(report.euclidean_std.nmi) << ','
        << csv_num(report.euclidean_mean.ari) << ',' << csv_num(report.euclidean_std.ari) << '\n';
  }
  {
    nlohmann::json j;
    nlohmann::json runs = nlohmann::json::array();
    for (const auto& cmp : report.runs)
      runs.push_back({{"semantic", {{"acc", cmp.semantic.acc}, {"nmi", cmp.semantic.nmi}, {"ari", cmp.semantic.ari}}},
                      {"euclidean", {{"acc", cmp.euclidean.acc}, {"nmi", cmp.euclidean.nmi}, {"ari", cmp.euclidean.ari}}}});
    j["runs"] = runs;
    std::ofstream out(opts.out_dir / "compare_matching.json");
    out << j.dump(2) << '\n';
  }

  manifest.config = config_to_kv(opts.config);
  manifest.config["data_dir"] = opts.data_dir.string();
  manifest.config["eta"] = csv_num(opts.eta);
  manifest.config["align_seed"] = std::to_string(align_seed);
  manifest.config["runs"] = std::to_string(opts.runs);
  manifest.artifacts = {"compare_matching.csv", "compare_matching.json", "manifest.json"};
  manifest.finished = iso_utc_now();
  write_manifest(manifest, opts.out_dir / "manifest.json");

  print_metrics("compare-matching semantic", report.semantic_mean);
  print_metrics("compare-matching euclidean", report.euclidean_mean);
  return report;
}

SelfcheckReport cmd_selfcheck(const SelfcheckOptions& opts) {
  RunManifest manifest;
  manifest.command = "selfcheck";
  manifest.started = iso_utc_now();

  SelfcheckReport report;
  CheckContext ctx{report, opts.inject_gradient_bug};
  check_gradients(ctx);
  check_correlation_invariants(ctx);
  check_threshold(ctx);
  check_graph_rules(ctx);
  check_metric_oracles(ctx);
  check_hungarian(ctx);
  check_contrastive_scalar(ctx);
  check_breakdown(ctx);

  report.all_pass = std::all_of(report.checks.begin(), report.checks.end(),
                                [](const auto& c) { return c.pass; });
  std::cout << (report.all_pass ? "selfcheck: all checks passed\n" : "selfcheck: FAILURES detected\n");

  if (!opts.out_dir.empty()) {
    std::filesystem::create_directories(opts.out_dir);
    nlohmann::json j;
    nlohmann::json checks = nlohmann::json::array();
    for (const auto& c : report.checks)
      checks.push_back({{"name", c.name}, {"max_err", c.max_err}, {"pass", c.pass}});
    j["checks"] = checks;
    j["all_pass"] = report.all_pass;
    std::ofstream out(opts.out_dir / "selfcheck.json");
    out << j.dump(2) << '\n';
    manifest.artifacts = {"selfcheck.json", "manifest.json"};
    manifest.finished = iso_utc_now();
    write_manifest(manifest, opts.out_dir / "manifest.json");
  }
  return report;
}

}  // namespace smclust
