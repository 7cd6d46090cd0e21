#include "smclust/trainer.hpp"

#include "smclust/rng.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>

namespace smclust {

const std::set<std::string>& known_ablations() {
  static const std::set<std::string> names = {
      "no_vda",     "no_smc",          "no_cfa",
      "no_cma",     "no_guidance",     "all_pairs_views",
      "graph_on_projection", "epoch_graph"};
  return names;
}

void TrainConfig::validate() const {
  if (d < 2) throw config_error("config: d must be at least 2");
  for (int h : hidden_dims)
    if (h < 1) throw config_error("config: hidden dims must be positive");
  if (!proj_dims.empty()) {
    if (proj_dims.size() < 2) throw config_error("config: proj_dims needs at least input and output");
    if (proj_dims.front() != d)
      throw config_error("config: proj_dims must start at the latent dimension d");
    for (int p : proj_dims)
      if (p < 1) throw config_error("config: proj_dims entries must be positive");
  }
  if (epochs < 1) throw config_error("config: epochs must be positive");
  if (batch_size < 2) throw config_error("config: batch_size must be at least 2");
  if (!(lr > 0.0) || !std::isfinite(lr)) throw config_error("config: lr must be positive");
  if (lambda1 < 0.0 || lambda2 < 0.0) throw config_error("config: loss weights must be non-negative");
  if (!(tau > 0.0)) throw config_error("config: tau must be positive");
  if (eval_every < 0) throw config_error("config: eval_every must be non-negative");
  if (kmeans_restarts < 1) throw config_error("config: kmeans_restarts must be positive");
  if (kmeans_max_iter < 1) throw config_error("config: kmeans_max_iter must be positive");
  if (kmeans_tol < 0.0) throw config_error("config: kmeans_tol must be non-negative");
  if (threads < 1) throw config_error("config: threads must be positive");
  for (const auto& a : ablations)
    if (!known_ablations().count(a)) throw config_error("config: unknown ablation '" + a + "'");
  if (ablated("no_cfa") && ablated("no_cma"))
    throw config_error("config: no_cfa and no_cma together; use no_vda instead");
}

namespace {

using PairList = std::vector<std::pair<int, int>>;

PairList view_pairs(int v_count, bool all_pairs) {
  PairList pairs;
  if (all_pairs) {
    for (int a = 0; a < v_count; ++a)
      for (int b = a + 1; b < v_count; ++b) pairs.emplace_back(a, b);
  } else {
    for (int b = 1; b < v_count; ++b) pairs.emplace_back(0, b);
  }
  return pairs;
}

SemanticGraph diagonal_graph(Eigen::Index n, const Mask& aligned) {
  SemanticGraph g;
  g.n = n;
  g.threshold = 1.0;
  g.rows.resize(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i)
    if (aligned[static_cast<std::size_t>(i)])
      g.rows[static_cast<std::size_t>(i)].emplace_back(static_cast<int>(i), 1.0);
  return g;
}

Vector aligned_pair_correlations(const Matrix& za, const Matrix& zb, const std::vector<int>& idx) {
  Matrix a(static_cast<Eigen::Index>(idx.size()), za.cols());
  Matrix b(static_cast<Eigen::Index>(idx.size()), zb.cols());
  for (std::size_t r = 0; r < idx.size(); ++r) {
    a.row(static_cast<Eigen::Index>(r)) = za.row(idx[r]);
    b.row(static_cast<Eigen::Index>(r)) = zb.row(idx[r]);
  }
  const StandardizedRows sa = standardize_rows(a);
  const StandardizedRows sb = standardize_rows(b);
  const double dm1 = static_cast<double>(za.cols() - 1);
  Vector diag(static_cast<Eigen::Index>(idx.size()));
  for (Eigen::Index r = 0; r < diag.size(); ++r) diag(r) = sa.u.row(r).dot(sb.u.row(r)) / dm1;
  return diag;
}

Matrix gather_rows(const Matrix& m, const std::vector<int>& idx) {
  Matrix out(static_cast<Eigen::Index>(idx.size()), m.cols());
  for (std::size_t r = 0; r < idx.size(); ++r) out.row(static_cast<Eigen::Index>(r)) = m.row(idx[r]);
  return out;
}

}  // namespace

Metrics metrics_mean(const std::vector<Metrics>& runs) {
  Metrics m;
  for (const auto& r : runs) {
    m.acc += r.acc;
    m.nmi += r.nmi;
    m.ari += r.ari;
  }
  const double n = static_cast<double>(runs.size());
  m.acc /= n;
  m.nmi /= n;
  m.ari /= n;
  return m;
}

Metrics metrics_stddev(const std::vector<Metrics>& runs, const Metrics& mean) {
  Metrics s;
  if (runs.size() < 2) return s;
  for (const auto& r : runs) {
    s.acc += (r.acc - mean.acc) * (r.acc - mean.acc);
    s.nmi += (r.nmi - mean.nmi) * (r.nmi - mean.nmi);
    s.ari += (r.ari - mean.ari) * (r.ari - mean.ari);
  }
  const double n = static_cast<double>(runs.size() - 1);
  s.acc = std::sqrt(s.acc / n);
  s.nmi = std::sqrt(s.nmi / n);
  s.ari = std::sqrt(s.ari / n);
  return s;
}

TrainedModel train(const MultiViewDataset& ds, const TrainConfig& cfg) {
  cfg.validate();
  ds.validate();
  const auto n = ds.n();
  if (n < 2) throw data_error("train: need at least 2 samples");
  const int v_count = ds.view_count();
  const auto batch_size = std::min<Eigen::Index>(cfg.batch_size, n);

  TrainedModel model;
  model.config = cfg;

  std::vector<Activation> enc_acts(cfg.hidden_dims.size(), Activation::relu);
  enc_acts.push_back(Activation::identity);
  for (int v = 0; v < v_count; ++v) {
    std::vector<int> enc_dims;
    enc_dims.push_back(static_cast<int>(ds.views[static_cast<std::size_t>(v)].cols()));
    enc_dims.insert(enc_dims.end(), cfg.hidden_dims.begin(), cfg.hidden_dims.end());
    enc_dims.push_back(cfg.d);
    std::vector<int> dec_dims(enc_dims.rbegin(), enc_dims.rend());
    model.encoders.emplace_back("encoder" + std::to_string(v + 1), enc_dims, enc_acts,
                                mix_seed(cfg.seed, 0xE000 + static_cast<std::uint64_t>(v)));
    model.decoders.emplace_back("decoder" + std::to_string(v + 1), dec_dims, enc_acts,
                                mix_seed(cfg.seed, 0xD000 + static_cast<std::uint64_t>(v)));
  }
  const std::vector<int> proj_dims =
      cfg.proj_dims.empty() ? std::vector<int>{cfg.d, cfg.d, cfg.d} : cfg.proj_dims;
  std::vector<Activation> proj_acts(proj_dims.size() - 2, Activation::relu);
  proj_acts.push_back(Activation::identity);
  model.projector = MlpNetwork("projector", proj_dims, proj_acts, mix_seed(cfg.seed, 0xF000));
  const Eigen::Index proj_out = proj_dims.back();

  std::vector<AdamState> enc_state(static_cast<std::size_t>(v_count));
  std::vector<AdamState> dec_state(static_cast<std::size_t>(v_count));
  AdamState proj_state;

  const bool use_vda = !cfg.ablated("no_vda");
  const bool use_smc = !cfg.ablated("no_smc");
  const bool use_cfa = !cfg.ablated("no_cfa");
  const bool use_cma = !cfg.ablated("no_cma");
  const bool no_guidance = cfg.ablated("no_guidance");
  const bool graph_on_projection = cfg.ablated("graph_on_projection");
  const PairList pairs = view_pairs(v_count, cfg.ablated("all_pairs_views"));
  const double pair_scale = pairs.empty() ? 0.0 : 1.0 / static_cast<double>(pairs.size());

  std::map<std::pair<int, int>, double> last_threshold;

  const bool epoch_graph = cfg.ablated("epoch_graph");
  std::vector<int> aligned_full;
  for (Eigen::Index i = 0; i < n; ++i)
    if (ds.aligned[static_cast<std::size_t>(i)]) aligned_full.push_back(static_cast<int>(i));
  std::map<std::pair<int, int>, SemanticGraph> full_graphs;
  std::vector<int> batch_pos(static_cast<std::size_t>(n), -1);

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    const BatchIndexPlan plan = make_batches(n, batch_size, mix_seed(cfg.seed, 1000 + static_cast<std::uint64_t>(epoch)));

    if (use_smc && epoch_graph && !no_guidance && !pairs.empty()) {
      full_graphs.clear();
      std::vector<Matrix> src(static_cast<std::size_t>(v_count));
      for (int v = 0; v < v_count; ++v) {
        src[static_cast<std::size_t>(v)] =
            model.encoders[static_cast<std::size_t>(v)].forward(ds.views[static_cast<std::size_t>(v)]);
        if (graph_on_projection)
          src[static_cast<std::size_t>(v)] =
              l2_normalize_rows(model.projector.forward(src[static_cast<std::size_t>(v)]));
      }
      for (const auto& [a, b] : pairs) {
        const Matrix& sa = src[static_cast<std::size_t>(a)];
        const Matrix& sb = src[static_cast<std::size_t>(b)];
        const double t = aligned_full.empty()
                             ? 1.0
                             : adaptive_threshold_from_diag(aligned_pair_correlations(sa, sb, aligned_full));
        full_graphs[std::make_pair(a, b)] = build_graph_streaming(sa, sb, ds.aligned, t);
      }
    }

    double sum_rec = 0.0, sum_cfa = 0.0, sum_cma = 0.0, sum_smc = 0.0;
    double sum_aligned = 0.0;
    int skipped = 0;

    for (const auto& batch : plan.batches) {
      const auto nb = static_cast<Eigen::Index>(batch.size());
      Mask aligned_batch(batch.size());
      std::vector<int> aligned_idx;
      for (std::size_t r = 0; r < batch.size(); ++r) {
        aligned_batch[r] = ds.aligned[static_cast<std::size_t>(batch[r])];
        if (aligned_batch[r]) aligned_idx.push_back(static_cast<int>(r));
      }
      sum_aligned += static_cast<double>(aligned_idx.size());

      std::vector<Matrix> x(static_cast<std::size_t>(v_count));
      std::vector<Matrix> z(static_cast<std::size_t>(v_count));
      std::vector<Matrix> xhat(static_cast<std::size_t>(v_count));
      for (int v = 0; v < v_count; ++v) {
        x[static_cast<std::size_t>(v)] = gather_rows(ds.views[static_cast<std::size_t>(v)], batch);
        z[static_cast<std::size_t>(v)] = model.encoders[static_cast<std::size_t>(v)].forward(x[static_cast<std::size_t>(v)]);
        xhat[static_cast<std::size_t>(v)] = model.decoders[static_cast<std::size_t>(v)].forward(z[static_cast<std::size_t>(v)]);
      }

      const RecLoss rec = loss_rec(x, xhat);
      const double rec_scale = cfg.rec_batch_scaling ? 1.0 / static_cast<double>(nb) : 1.0;
      const double rec_val = rec.value * rec_scale;

      std::vector<Matrix> dz(static_cast<std::size_t>(v_count));
      std::vector<Gradients> dec_grads(static_cast<std::size_t>(v_count));
      for (int v = 0; v < v_count; ++v) {
        dec_grads[static_cast<std::size_t>(v)] =
            model.decoders[static_cast<std::size_t>(v)].backward(rec.grad_xhat[static_cast<std::size_t>(v)] * rec_scale);
        dz[static_cast<std::size_t>(v)] = dec_grads[static_cast<std::size_t>(v)].dinput;
      }

      double cfa_val = 0.0, cma_val = 0.0;
      if (use_vda && aligned_idx.size() >= 2) {
        for (const auto& [a, b] : pairs) {
          const Matrix za = gather_rows(z[static_cast<std::size_t>(a)], aligned_idx);
          const Matrix zb = gather_rows(z[static_cast<std::size_t>(b)], aligned_idx);
          const VdaLoss vda = loss_vda(za, zb, use_cfa, use_cma);
          cfa_val += vda.cfa * pair_scale;
          cma_val += vda.cma * pair_scale;
          const double w = cfg.lambda1 * pair_scale;
          for (std::size_t r = 0; r < aligned_idx.size(); ++r) {
            dz[static_cast<std::size_t>(a)].row(aligned_idx[r]) += w * vda.grad_za.row(static_cast<Eigen::Index>(r));
            dz[static_cast<std::size_t>(b)].row(aligned_idx[r]) += w * vda.grad_zb.row(static_cast<Eigen::Index>(r));
          }
        }
      }

      double smc_val = 0.0;
      Gradients proj_grads;
      if (use_smc && !pairs.empty()) {
        Matrix stacked(nb * v_count, cfg.d);
        for (int v = 0; v < v_count; ++v) stacked.middleRows(nb * v, nb) = z[static_cast<std::size_t>(v)];
        const Matrix h_raw = model.projector.forward(stacked);

        std::vector<RowNormCache> norm(static_cast<std::size_t>(v_count));
        std::vector<Matrix> h(static_cast<std::size_t>(v_count));
        std::vector<Matrix> dh(static_cast<std::size_t>(v_count));
        for (int v = 0; v < v_count; ++v) {
          norm[static_cast<std::size_t>(v)] = l2_normalize_rows_cached(h_raw.middleRows(nb * v, nb));
          h[static_cast<std::size_t>(v)] = norm[static_cast<std::size_t>(v)].y;
          dh[static_cast<std::size_t>(v)] = Matrix::Zero(nb, proj_out);
        }

        for (const auto& [a, b] : pairs) {
          SemanticGraph g;
          if (no_guidance) {
            g = diagonal_graph(nb, aligned_batch);
          } else if (epoch_graph) {
            const SemanticGraph& fg = full_graphs.at(std::make_pair(a, b));
            for (std::size_t r = 0; r < batch.size(); ++r)
              batch_pos[static_cast<std::size_t>(batch[r])] = static_cast<int>(r);
            g.n = nb;
            g.threshold = fg.threshold;
            g.rows.resize(batch.size());
            for (std::size_t r = 0; r < batch.size(); ++r) {
              for (const auto& [k, w] : fg.rows[static_cast<std::size_t>(batch[r])]) {
                const int p = batch_pos[static_cast<std::size_t>(k)];
                if (p >= 0) g.rows[r].emplace_back(p, w);
              }
              std::sort(g.rows[r].begin(), g.rows[r].end());
            }
            for (int gi : batch) batch_pos[static_cast<std::size_t>(gi)] = -1;
          } else {
            const Matrix& src_a = graph_on_projection ? h[static_cast<std::size_t>(a)] : z[static_cast<std::size_t>(a)];
            const Matrix& src_b = graph_on_projection ? h[static_cast<std::size_t>(b)] : z[static_cast<std::size_t>(b)];
            const auto key = std::make_pair(a, b);
            if (aligned_idx.size() >= 2) {
              const Vector diag = aligned_pair_correlations(src_a, src_b, aligned_idx);
              last_threshold[key] = adaptive_threshold_from_diag(diag);
            }
            const auto it = last_threshold.find(key);
            if (it == last_threshold.end()) {
              g = diagonal_graph(nb, aligned_batch);
            } else {
              g = build_graph(cross_cov(src_a, src_b), aligned_batch, it->second);
            }
          }

          const SmcLoss smc = loss_smc(h[static_cast<std::size_t>(a)], h[static_cast<std::size_t>(b)], g,
                                       aligned_batch, cfg.tau);
          smc_val += smc.value * pair_scale;
          skipped += smc.skipped_rows;
          const double w = cfg.lambda2 * pair_scale;
          dh[static_cast<std::size_t>(a)] += w * smc.grad_ha;
          dh[static_cast<std::size_t>(b)] += w * smc.grad_hb;
        }

        Matrix dh_raw(nb * v_count, proj_out);
        for (int v = 0; v < v_count; ++v)
          dh_raw.middleRows(nb * v, nb) =
              l2_normalize_rows_backward(norm[static_cast<std::size_t>(v)], dh[static_cast<std::size_t>(v)]);
        proj_grads = model.projector.backward(dh_raw);
        for (int v = 0; v < v_count; ++v)
          dz[static_cast<std::size_t>(v)] += proj_grads.dinput.middleRows(nb * v, nb);
      }

      for (int v = 0; v < v_count; ++v) {
        const Gradients enc_grads = model.encoders[static_cast<std::size_t>(v)].backward(dz[static_cast<std::size_t>(v)]);
        adam_step(enc_state[static_cast<std::size_t>(v)], model.encoders[static_cast<std::size_t>(v)], enc_grads, cfg.lr);
        adam_step(dec_state[static_cast<std::size_t>(v)], model.decoders[static_cast<std::size_t>(v)],
                  dec_grads[static_cast<std::size_t>(v)], cfg.lr);
      }
      if (use_smc && !pairs.empty()) adam_step(proj_state, model.projector, proj_grads, cfg.lr);

      sum_rec += rec_val;
      sum_cfa += cfa_val;
      sum_cma += cma_val;
      sum_smc += smc_val;
    }

    const double nb_count = static_cast<double>(plan.batches.size());
    TrainLogRow row;
    row.epoch = epoch;
    row.losses = loss_total(sum_rec / nb_count, sum_cfa / nb_count, sum_cma / nb_count,
                            sum_smc / nb_count, cfg.lambda1, cfg.lambda2, cfg.tau);
    row.aligned_per_batch = sum_aligned / nb_count;
    row.smc_skipped = skipped;
    row.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    model.log.push_back(row);

    if (cfg.eval_every > 0 && epoch % cfg.eval_every == 0 && epoch < cfg.epochs) {
      const EvaluationResult ev = evaluate(model, ds);
      model.interim.emplace_back(epoch, ev.metrics);
    }
  }
  return model;
}

std::vector<Matrix> encode_views(const TrainedModel& model, const MultiViewDataset& ds) {
  if (static_cast<int>(model.encoders.size()) != ds.view_count())
    throw data_error("encode_views: model has " + std::to_string(model.encoders.size()) +
                     " encoders but the dataset has " + std::to_string(ds.view_count()) + " views");
  std::vector<Matrix> z;
  z.reserve(model.encoders.size());
  for (std::size_t v = 0; v < model.encoders.size(); ++v)
    z.push_back(model.encoders[v].forward(ds.views[v]));
  return z;
}

EvaluationResult evaluate(const TrainedModel& model, const MultiViewDataset& ds) {
  ds.validate();
  const auto n = ds.n();
  const int v_count = ds.view_count();
  const TrainConfig& cfg = model.config;

  const std::vector<Matrix> z = encode_views(model, ds);

  EvaluationResult out;
  out.seed = cfg.seed;
  out.k = ds.class_count();
  out.embeddings.resize(static_cast<std::size_t>(v_count));
  for (int v = 0; v < v_count; ++v) {
    const Matrix h_raw = model.projector.forward(z[static_cast<std::size_t>(v)]);
    out.embeddings[static_cast<std::size_t>(v)] = l2_normalize_rows(h_raw);
  }

  std::vector<int> aligned_idx;
  for (Eigen::Index i = 0; i < n; ++i)
    if (ds.aligned[static_cast<std::size_t>(i)]) aligned_idx.push_back(static_cast<int>(i));

  const bool no_guidance = cfg.ablated("no_guidance");
  const bool graph_on_projection = cfg.ablated("graph_on_projection");

  std::vector<SemanticGraph> graphs;
  for (int v = 1; v < v_count; ++v) {
    PairGraphInfo info;
    info.view = v;
    if (no_guidance) {
      info.graph = diagonal_graph(n, ds.aligned);
    } else {
      const Matrix& src_a = graph_on_projection ? out.embeddings[0] : z[0];
      const Matrix& src_b =
          graph_on_projection ? out.embeddings[static_cast<std::size_t>(v)] : z[static_cast<std::size_t>(v)];
      double threshold = 1.0;
      if (aligned_idx.size() >= 1) {
        const Vector diag = aligned_pair_correlations(src_a, src_b, aligned_idx);
        threshold = adaptive_threshold_from_diag(diag);
        info.threshold = threshold;
      }
      info.graph = build_graph_streaming(src_a, src_b, ds.aligned, threshold);
    }
    IntVector labels_b(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) labels_b[static_cast<std::size_t>(i)] = ds.row_label(v, i);
    info.purity = graph_purity(info.graph, ds.labels, labels_b);
    graphs.push_back(info.graph);
    out.graphs.push_back(std::move(info));
  }

  out.fused = fuse(out.embeddings, graphs);
  out.clusters = kmeans(out.fused.fused, out.k, mix_seed(cfg.seed, 0xC1),
                        KmeansOptions{cfg.kmeans_restarts, cfg.kmeans_max_iter, cfg.kmeans_tol, cfg.threads});
  out.metrics = clustering_metrics(out.clusters.assignments, ds.labels);
  return out;
}

std::set<std::string> variant_ablations(const std::string& variant) {
  if (variant == "full") return {};
  if (variant == "rec_only") return {"no_vda", "no_smc"};
  if (variant == "rec_vda" || variant == "rec+vda") return {"no_smc"};
  if (variant == "rec_smc" || variant == "rec+smc") return {"no_vda"};
  if (known_ablations().count(variant)) return {variant};
  throw config_error("unknown objective variant '" + variant + "'");
}

std::vector<AblationRow> run_ablation_suite(const MultiViewDataset& ds, const TrainConfig& base,
                                            const std::vector<std::string>& variants, int n_seeds) {
  if (n_seeds < 1) throw config_error("run_ablation_suite: n_seeds must be positive");
  if (variants.empty()) throw config_error("run_ablation_suite: no variants given");
  std::vector<AblationRow> rows;
  for (const auto& variant : variants) {
    AblationRow row;
    row.variant = variant;
    // The variant's switches compose with any already-configured ones.
    auto ablations = variant_ablations(variant);
    ablations.insert(base.ablations.begin(), base.ablations.end());
    for (int r = 0; r < n_seeds; ++r) {
      TrainConfig cfg = base;
      cfg.ablations = ablations;
      cfg.seed = base.seed + static_cast<std::uint64_t>(r);
      const TrainedModel model = train(ds, cfg);
      row.runs.push_back(evaluate(model, ds).metrics);
    }
    row.mean = metrics_mean(row.runs);
    row.stddev = metrics_stddev(row.runs, row.mean);
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<SweepRow> sweep_alignment(const MultiViewDataset& aligned_ds, const TrainConfig& base,
                                      const std::vector<double>& etas, int n_seeds) {
  if (n_seeds < 1) throw config_error("sweep_alignment: n_seeds must be positive");
  if (etas.empty()) throw config_error("sweep_alignment: no alignment ratios given");
  if (aligned_ds.aligned_count() != aligned_ds.n())
    throw data_error("sweep_alignment: input dataset must be fully aligned");
  std::vector<SweepRow> rows;
  for (std::size_t ei = 0; ei < etas.size(); ++ei) {
    SweepRow row;
    row.eta = etas[ei];
    for (int r = 0; r < n_seeds; ++r) {
      TrainConfig cfg = base;
      cfg.seed = base.seed + static_cast<std::uint64_t>(r);
      const MultiViewDataset ds =
          apply_partial_alignment(aligned_ds, etas[ei], mix_seed(cfg.seed, 7000 + ei));
      const TrainedModel model = train(ds, cfg);
      row.runs.push_back(evaluate(model, ds).metrics);
    }
    row.mean = metrics_mean(row.runs);
    row.stddev = metrics_stddev(row.runs, row.mean);
    rows.push_back(std::move(row));
  }
  return rows;
}

MatchingComparison compare_matching(const TrainedModel& model, const MultiViewDataset& ds) {
  const EvaluationResult ev = evaluate(model, ds);
  const auto n = ds.n();
  const int v_count = ds.view_count();
  const auto d = ev.embeddings[0].cols();

  std::vector<int> loose;
  for (Eigen::Index i = 0; i < n; ++i)
    if (!ds.aligned[static_cast<std::size_t>(i)]) loose.push_back(static_cast<int>(i));

  Matrix fused(n, d * v_count);
  fused.leftCols(d) = ev.embeddings[0];
  for (int v = 1; v < v_count; ++v) {
    const Matrix& hv = ev.embeddings[static_cast<std::size_t>(v)];
    auto block = fused.middleCols(static_cast<Eigen::Index>(v) * d, d);
    for (Eigen::Index i = 0; i < n; ++i) {
      if (ds.aligned[static_cast<std::size_t>(i)]) {
        block.row(i) = hv.row(i);
        continue;
      }
      int best = -1;
      double best_d = std::numeric_limits<double>::infinity();
      for (int j : loose) {
        const double dist = (ev.embeddings[0].row(i) - hv.row(j)).squaredNorm();
        if (dist < best_d) {
          best_d = dist;
          best = j;
        }
      }
      block.row(i) = hv.row(best);
    }
  }

  const ClusterResult clusters =
      kmeans(fused, ev.k, mix_seed(model.config.seed, 0xC1),
             KmeansOptions{model.config.kmeans_restarts, model.config.kmeans_max_iter,
                           model.config.kmeans_tol, model.config.threads});

  MatchingComparison out;
  out.semantic = ev.metrics;
  out.euclidean = clustering_metrics(clusters.assignments, ds.labels);
  return out;
}

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

int parse_int(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const int v = std::stoi(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw config_error("config: invalid integer for " + key + ": '" + value + "'");
  }
}

double parse_double(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw config_error("config: invalid number for " + key + ": '" + value + "'");
  }
}

std::uint64_t parse_uint64(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const unsigned long long v = std::stoull(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return static_cast<std::uint64_t>(v);
  } catch (const std::exception&) {
    throw config_error("config: invalid seed for " + key + ": '" + value + "'");
  }
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw config_error("config: invalid boolean for " + key + ": '" + value + "'");
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> parts;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) parts.push_back(item);
  }
  return parts;
}

std::string format_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

std::map<std::string, std::string> parse_config_text(const std::string& text, const std::string& origin) {
  std::istringstream in(text);
  std::map<std::string, std::string> kv;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw config_error(origin + ":" + std::to_string(line_no) + ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw config_error(origin + ":" + std::to_string(line_no) + ": empty key");
    kv[key] = value;
  }
  return kv;
}

std::map<std::string, std::string> read_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw config_error("cannot open config file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config_text(buffer.str(), path.string());
}

TrainConfig apply_config_kv(const std::map<std::string, std::string>& kv, TrainConfig base) {
  for (const auto& [key, value] : kv) {
    if (key == "d") base.d = parse_int(key, value);
    else if (key == "hidden_dims") {
      base.hidden_dims.clear();
      for (const auto& part : split_list(value)) base.hidden_dims.push_back(parse_int(key, part));
    } else if (key == "proj_dims") {
      base.proj_dims.clear();
      if (value != "default")
        for (const auto& part : split_list(value)) base.proj_dims.push_back(parse_int(key, part));
    } else if (key == "epochs") base.epochs = parse_int(key, value);
    else if (key == "batch_size") base.batch_size = parse_int(key, value);
    else if (key == "lr") base.lr = parse_double(key, value);
    else if (key == "lambda1") base.lambda1 = parse_double(key, value);
    else if (key == "lambda2") base.lambda2 = parse_double(key, value);
    else if (key == "tau") base.tau = parse_double(key, value);
    else if (key == "seed") base.seed = parse_uint64(key, value);
    else if (key == "ablations") {
      base.ablations.clear();
      for (const auto& part : split_list(value)) base.ablations.insert(part);
    } else if (key == "eval_every") base.eval_every = parse_int(key, value);
    else if (key == "rec_batch_scaling") base.rec_batch_scaling = parse_bool(key, value);
    else if (key == "kmeans_restarts") base.kmeans_restarts = parse_int(key, value);
    else if (key == "kmeans_max_iter") base.kmeans_max_iter = parse_int(key, value);
    else if (key == "kmeans_tol") base.kmeans_tol = parse_double(key, value);
    else if (key == "threads") base.threads = parse_int(key, value);
    else throw config_error("config: unknown key '" + key + "'");
  }
  base.validate();
  return base;
}

std::map<std::string, std::string> config_to_kv(const TrainConfig& cfg) {
  std::map<std::string, std::string> kv;
  kv["d"] = std::to_string(cfg.d);
  std::string hidden;
  for (std::size_t i = 0; i < cfg.hidden_dims.size(); ++i) {
    if (i) hidden += ",";
    hidden += std::to_string(cfg.hidden_dims[i]);
  }
  kv["hidden_dims"] = hidden;
  if (cfg.proj_dims.empty()) {
    kv["proj_dims"] = "default";
  } else {
    std::string proj;
    for (std::size_t i = 0; i < cfg.proj_dims.size(); ++i) {
      if (i) proj += ",";
      proj += std::to_string(cfg.proj_dims[i]);
    }
    kv["proj_dims"] = proj;
  }
  kv["epochs"] = std::to_string(cfg.epochs);
  kv["batch_size"] = std::to_string(cfg.batch_size);
  kv["lr"] = format_double(cfg.lr);
  kv["lambda1"] = format_double(cfg.lambda1);
  kv["lambda2"] = format_double(cfg.lambda2);
  kv["tau"] = format_double(cfg.tau);
  kv["seed"] = std::to_string(cfg.seed);
  std::string ablations;
  for (const auto& a : cfg.ablations) {
    if (!ablations.empty()) ablations += ",";
    ablations += a;
  }
  kv["ablations"] = ablations;
  kv["eval_every"] = std::to_string(cfg.eval_every);
  kv["rec_batch_scaling"] = cfg.rec_batch_scaling ? "true" : "false";
  kv["kmeans_restarts"] = std::to_string(cfg.kmeans_restarts);
  kv["kmeans_max_iter"] = std::to_string(cfg.kmeans_max_iter);
  kv["kmeans_tol"] = format_double(cfg.kmeans_tol);
  kv["threads"] = std::to_string(cfg.threads);
  return kv;
}

void write_config_echo(const TrainConfig& cfg, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw data_error("cannot open " + path.string());
  for (const auto& [key, value] : config_to_kv(cfg)) out << key << " = " << value << '\n';
  if (!out.good()) throw data_error("write failed for " + path.string());
}

void write_loss_log(const std::vector<TrainLogRow>& log, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw data_error("cannot open " + path.string());
  out << "epoch,rec,cfa,cma,vda,smc,total,aligned_per_batch,smc_skipped,wall_ms\n";
  out.precision(17);
  for (const auto& row : log) {
    out << row.epoch << ',' << row.losses.rec << ',' << row.losses.cfa << ',' << row.losses.cma << ','
        << row.losses.vda << ',' << row.losses.smc << ',' << row.losses.total << ','
        << row.aligned_per_batch << ',' << row.smc_skipped << ',' << row.wall_ms << '\n';
  }
  if (!out.good()) throw data_error("write failed for " + path.string());
}

}  // namespace smclust
