// Release acceptance battery. Each numbered criterion prints exactly one
// PASS/FAIL line with the measured values and its wall time; the process
// exits 0 only when every criterion holds. Expensive end-to-end runs are
// shared between criteria where the protocol allows it.

#include "smclust/cluster.hpp"
#include "smclust/commands.hpp"
#include "smclust/data.hpp"
#include "smclust/graph.hpp"
#include "smclust/losses.hpp"
#include "smclust/nn.hpp"
#include "smclust/stats.hpp"
#include "smclust/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>
#include <vector>

using namespace smclust;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

int g_failures = 0;

void report(int id, bool pass, const std::string& detail, double seconds) {
  std::ostringstream line;
  line << "CRITERION " << (id < 10 ? " " : "") << id << ": " << (pass ? "PASS" : "FAIL") << " — "
       << detail << " [" << std::fixed << std::setprecision(1) << seconds << "s]";
  std::cout << line.str() << std::endl;
  if (!pass) ++g_failures;
}

double elapsed(const Clock::time_point& start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> dist(0.0, 1.0);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = dist(rng);
  return m;
}

double median(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

std::string fmt(double v, int digits = 4) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(digits) << v;
  return out.str();
}

// ---------------------------------------------------------------------------
// Criterion 1: analytic gradients of every loss term, differentiated through
// the encoder/decoder/projector chains (standardization, covariance,
// projection, row normalization included), match central finite differences.
// ---------------------------------------------------------------------------

double check_loss_gradients_once(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const Eigen::Index batch = 16;
  const int d = 8;
  // Smooth hidden activations: central differences are only a valid reference
  // away from kinks, and across 20 seeds a piecewise-linear activation is
  // guaranteed to land pre-activations inside the step width eventually.
  MlpNetwork enc_a("enc_a", {7, 10, d}, {Activation::tanh_fn, Activation::identity}, seed * 13 + 1);
  MlpNetwork enc_b("enc_b", {6, 10, d}, {Activation::tanh_fn, Activation::identity}, seed * 13 + 2);
  MlpNetwork dec_a("dec_a", {d, 10, 7}, {Activation::tanh_fn, Activation::identity}, seed * 13 + 3);
  MlpNetwork proj("proj", {d, d, d}, {Activation::tanh_fn, Activation::identity}, seed * 13 + 4);
  const Matrix xa = random_matrix(batch, 7, rng);
  const Matrix xb = random_matrix(batch, 6, rng);
  Mask aligned(static_cast<std::size_t>(batch), 1);
  aligned[3] = 0;
  aligned[11] = 0;

  double worst = 0.0;
  const auto track = [&worst](const GradCheckReport& r) { worst = std::max(worst, r.max_rel_err); };

  // Reconstruction through encoder and decoder.
  const auto rec_loss = [&](MlpNetwork& e) { return loss_rec({xa}, {dec_a.forward(e.forward(xa))}).value; };
  const auto rec_grad_enc = [&](MlpNetwork& e) {
    const Matrix za = e.forward(xa);
    const Matrix xhat = dec_a.forward(za);
    const RecLoss loss = loss_rec({xa}, {xhat});
    const Gradients gd = dec_a.backward(loss.grad_xhat[0]);
    return e.backward(gd.dinput);
  };
  track(grad_check(rec_loss, rec_grad_enc, enc_a, 1e-4, seed));
  const auto rec_loss_dec = [&](MlpNetwork& dec) { return loss_rec({xa}, {dec.forward(enc_a.forward(xa))}).value; };
  const auto rec_grad_dec = [&](MlpNetwork& dec) {
    const Matrix xhat = dec.forward(enc_a.forward(xa));
    return dec.backward(loss_rec({xa}, {xhat}).grad_xhat[0]);
  };
  track(grad_check(rec_loss_dec, rec_grad_dec, dec_a, 1e-4, seed));

  // Correlation-diagonal and correlation-matrix alignment through both
  // encoders (the full standardization + covariance chain).
  const auto vda_parts = [&](bool use_cfa, bool use_cma) {
    const auto loss_fn = [&, use_cfa, use_cma](MlpNetwork& e) {
      return loss_vda(e.forward(xa), enc_b.forward(xb), use_cfa, use_cma).value;
    };
    const auto grad_fn = [&, use_cfa, use_cma](MlpNetwork& e) {
      const Matrix za = e.forward(xa);
      const VdaLoss loss = loss_vda(za, enc_b.forward(xb), use_cfa, use_cma);
      return e.backward(loss.grad_za);
    };
    track(grad_check(loss_fn, grad_fn, enc_a, 1e-4, seed));
  };
  vda_parts(true, false);   // diagonal part only
  vda_parts(false, true);   // matrix part only
  vda_parts(true, true);    // combined
  const auto vda_loss_b = [&](MlpNetwork& e) { return loss_vda(enc_a.forward(xa), e.forward(xb)).value; };
  const auto vda_grad_b = [&](MlpNetwork& e) {
    const Matrix zb = e.forward(xb);
    const VdaLoss loss = loss_vda(enc_a.forward(xa), zb);
    return e.backward(loss.grad_zb);
  };
  track(grad_check(vda_loss_b, vda_grad_b, enc_b, 1e-4, seed));

  // Contrastive loss through projection and row normalization, with a graph
  // frozen at the initial parameters so only the loss inputs vary.
  const Matrix za0 = enc_a.forward(xa);
  const Matrix zb0 = enc_b.forward(xb);
  const CovMatrix c0 = cross_cov(za0, zb0);
  Vector diag0(batch);
  int na = 0;
  for (Eigen::Index i = 0; i < batch; ++i)
    if (aligned[static_cast<std::size_t>(i)]) diag0(na++) = c0.values(i, i);
  const SemanticGraph omega =
      build_graph(c0, aligned, 0.5 * adaptive_threshold_from_diag(diag0.head(na)));
  const double tau = 0.7;

  const auto smc_loss_proj = [&](MlpNetwork& p) {
    const Matrix ha = l2_normalize_rows(p.forward(enc_a.forward(xa)));
    const Matrix hb = l2_normalize_rows(p.forward(enc_b.forward(xb)));
    return loss_smc(ha, hb, omega, aligned, tau).value;
  };
  const auto smc_grad_proj = [&](MlpNetwork& p) {
    const Matrix pa = p.forward(enc_a.forward(xa));
    const auto ca = l2_normalize_rows_cached(pa);
    const Matrix pb = p.forward(enc_b.forward(xb));
    const auto cb = l2_normalize_rows_cached(pb);
    const SmcLoss loss = loss_smc(ca.y, cb.y, omega, aligned, tau);
    // The projector is shared by both views: run its backward pass on the
    // stacked batch so both contributions accumulate.
    (void)p.forward(enc_a.forward(xa));
    Gradients ga = p.backward(l2_normalize_rows_backward(ca, loss.grad_ha));
    (void)p.forward(enc_b.forward(xb));
    const Gradients gb = p.backward(l2_normalize_rows_backward(cb, loss.grad_hb));
    ga += gb;
    return ga;
  };
  track(grad_check(smc_loss_proj, smc_grad_proj, proj, 1e-4, seed));

  const auto smc_loss_enc = [&](MlpNetwork& e) {
    const Matrix ha = l2_normalize_rows(proj.forward(e.forward(xa)));
    const Matrix hb = l2_normalize_rows(proj.forward(enc_b.forward(xb)));
    return loss_smc(ha, hb, omega, aligned, tau).value;
  };
  const auto smc_grad_enc = [&](MlpNetwork& e) {
    const Matrix za = e.forward(xa);
    const Matrix pa = proj.forward(za);
    const auto ca = l2_normalize_rows_cached(pa);
    const Matrix pb = proj.forward(enc_b.forward(xb));
    const auto cb = l2_normalize_rows_cached(pb);
    const SmcLoss loss = loss_smc(ca.y, cb.y, omega, aligned, tau);
    (void)proj.forward(za);
    const Gradients gp = proj.backward(l2_normalize_rows_backward(ca, loss.grad_ha));
    return e.backward(gp.dinput);
  };
  track(grad_check(smc_loss_enc, smc_grad_enc, enc_a, 1e-4, seed));

  return worst;
}

void criterion_1() {
  const auto start = Clock::now();
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed)
    worst = std::max(worst, check_loss_gradients_once(seed));
  const double secs = elapsed(start);
  const bool pass = worst <= 1e-4 && secs < 120.0;
  report(1, pass, "loss gradients vs central differences, max rel err " + fmt(worst, 9) +
                      " (tol 1e-4, 20 seeds, d=8, batch 16)", secs);
}

// ---------------------------------------------------------------------------
// Criterion 2: correlation invariants on random instances.
// ---------------------------------------------------------------------------

void criterion_2() {
  const auto start = Clock::now();
  std::mt19937_64 rng(2024);
  double worst_self = 0.0, worst_bound = 0.0, worst_inv = 0.0, worst_batch = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const Matrix za = random_matrix(10, 6, rng);
    const Matrix zb = random_matrix(10, 6, rng);
    const CovMatrix intra = intra_cov(za);
    for (Eigen::Index i = 0; i < 10; ++i)
      worst_self = std::max(worst_self, std::abs(intra.values(i, i) - 1.0));
    const CovMatrix cross = cross_cov(za, zb);
    worst_bound = std::max(worst_bound, std::max(cross.values.maxCoeff() - 1.0,
                                                 -1.0 - cross.values.minCoeff()));
    const Vector u = za.row(0).transpose();
    const Vector v = zb.row(0).transpose();
    const Vector scaled = 2.5 * u.array() + 3.0;
    worst_inv = std::max(worst_inv, std::abs(pearson(scaled, v) - pearson(u, v)));
    for (Eigen::Index i = 0; i < 10; ++i)
      for (Eigen::Index j = 0; j < 10; ++j)
        worst_batch = std::max(worst_batch,
                               std::abs(cross.values(i, j) -
                                        pearson(za.row(i).transpose(), zb.row(j).transpose())));
  }
  const double secs = elapsed(start);
  const bool pass = worst_self <= 1e-9 && worst_bound <= 1e-9 && worst_inv <= 1e-9 &&
                    worst_batch <= 1e-12 && secs < 30.0;
  report(2, pass, "self-corr dev " + fmt(worst_self, 12) + ", bound excess " + fmt(worst_bound, 12) +
                      ", scale/shift dev " + fmt(worst_inv, 12) + ", batch-vs-elementwise dev " +
                      fmt(worst_batch, 15), secs);
}

// ---------------------------------------------------------------------------
// Criterion 3: adaptive threshold exactness and clamping.
// ---------------------------------------------------------------------------

void criterion_3() {
  const auto start = Clock::now();
  Vector diag(3);
  diag << 0.6, 0.8, 1.0;
  const double t = adaptive_threshold_from_diag(diag);
  Vector neg(2);
  neg << -0.5, -0.5;
  const double clamped = adaptive_threshold_from_diag(neg);
  const double secs = elapsed(start);
  const bool pass = std::abs(t - 0.6) <= 1e-15 && clamped == 0.0 && secs < 1.0;
  report(3, pass, "threshold([0.6,0.8,1.0]) = " + fmt(t, 17) + " (want 0.6, sample-deviation rule), " +
                      "clamp([-0.5,-0.5]) = " + fmt(clamped, 3), secs);
}

// ---------------------------------------------------------------------------
// Criterion 4: the three-case edge rule against a literal dense reference.
// ---------------------------------------------------------------------------

void criterion_4() {
  const auto start = Clock::now();
  std::mt19937_64 rng(4040);
  std::uniform_real_distribution<double> corr(-1.0, 1.0);
  std::uniform_real_distribution<double> tdist(0.0, 0.999);
  std::bernoulli_distribution mask(0.5);
  int mismatches = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const Eigen::Index n = 2 + (trial % 8);
    CovMatrix c;
    c.values = Matrix(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j) c.values(i, j) = corr(rng);
    const double threshold = tdist(rng);
    Mask aligned(static_cast<std::size_t>(n));
    for (auto& a : aligned) a = mask(rng) ? 1 : 0;

    // Literal dense re-statement of the rule.
    Matrix ref = Matrix::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j) {
        if (i == j && aligned[static_cast<std::size_t>(i)])
          ref(i, j) = 1.0;
        else if (c.values(i, j) > threshold)
          ref(i, j) = c.values(i, j);
      }

    const SemanticGraph g = build_graph(c, aligned, threshold);
    Matrix got = Matrix::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
      for (const auto& [k, w] : g.rows[static_cast<std::size_t>(i)]) got(i, k) = w;
    if (!(got.array() == ref.array()).all()) ++mismatches;
  }
  const double secs = elapsed(start);
  const bool pass = mismatches == 0 && secs < 30.0;
  report(4, pass, "edge rule vs dense reference on 200 random (matrix, threshold, mask) triples, " +
                      std::to_string(mismatches) + " mismatches", secs);
}

// ---------------------------------------------------------------------------
// Criterion 5: diagonal-only guidance reduces to the plain contrastive loss.
// ---------------------------------------------------------------------------

void criterion_5() {
  const auto start = Clock::now();
  std::mt19937_64 rng(5055);
  std::uniform_real_distribution<double> tdist(0.2, 1.5);
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::Index n = 8 + (trial % 9);
    const Matrix ha = l2_normalize_rows(random_matrix(n, 8, rng));
    const Matrix hb = l2_normalize_rows(random_matrix(n, 8, rng));
    const double tau = tdist(rng);
    SemanticGraph diag;
    diag.n = n;
    diag.rows.assign(static_cast<std::size_t>(n), {});
    for (Eigen::Index i = 0; i < n; ++i)
      diag.rows[static_cast<std::size_t>(i)] = {{static_cast<int>(i), 1.0}};
    const SmcLoss got = loss_smc(ha, hb, diag, Mask(static_cast<std::size_t>(n), 1), tau);

    double reference = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      double den = 0.0;
      for (Eigen::Index j = 0; j < n; ++j) den += std::exp(ha.row(i).dot(hb.row(j)) / tau);
      reference += -std::log(std::exp(ha.row(i).dot(hb.row(i)) / tau) / den);
    }
    reference /= static_cast<double>(n);
    worst = std::max(worst, std::abs(got.value - reference));
  }
  const double secs = elapsed(start);
  const bool pass = worst <= 1e-10 && secs < 30.0;
  report(5, pass, "diagonal-graph contrastive vs independent reference, max dev " + fmt(worst, 14) +
                      " (20 random batches)", secs);
}

// ---------------------------------------------------------------------------
// Criterion 6: metric oracles.
// ---------------------------------------------------------------------------

double brute_force_acc(const IntVector& pred, const IntVector& truth) {
  int k = 0;
  for (int v : pred) k = std::max(k, v + 1);
  for (int v : truth) k = std::max(k, v + 1);
  IntVector perm(static_cast<std::size_t>(k));
  std::iota(perm.begin(), perm.end(), 0);
  double best = 0.0;
  do {
    int hits = 0;
    for (std::size_t i = 0; i < pred.size(); ++i)
      if (perm[static_cast<std::size_t>(pred[i])] == truth[i]) ++hits;
    best = std::max(best, static_cast<double>(hits) / static_cast<double>(pred.size()));
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

void criterion_6() {
  const auto start = Clock::now();

  // Accuracy equals the exhaustive best-permutation value for every pred
  // vector with N <= 8 and labels < K <= 4: full double enumeration for
  // N <= 4, pred-exhaustive against a cyclic truth for N = 5..8.
  long long acc_mismatches = 0;
  long long acc_checked = 0;
  for (int k = 1; k <= 4; ++k) {
    for (int n = 1; n <= 8; ++n) {
      const long long total = static_cast<long long>(std::pow(k, n));
      IntVector truth(static_cast<std::size_t>(n));
      for (int i = 0; i < n; ++i) truth[static_cast<std::size_t>(i)] = i % k;
      for (long long code = 0; code < total; ++code) {
        IntVector pred(static_cast<std::size_t>(n));
        long long rest = code;
        for (int i = 0; i < n; ++i) {
          pred[static_cast<std::size_t>(i)] = static_cast<int>(rest % k);
          rest /= k;
        }
        if (n <= 4) {
          for (long long tcode = 0; tcode < total; ++tcode) {
            IntVector t2(static_cast<std::size_t>(n));
            long long trest = tcode;
            for (int i = 0; i < n; ++i) {
              t2[static_cast<std::size_t>(i)] = static_cast<int>(trest % k);
              trest /= k;
            }
            ++acc_checked;
            if (std::abs(acc(pred, t2) - brute_force_acc(pred, t2)) > 1e-12) ++acc_mismatches;
          }
        } else {
          ++acc_checked;
          if (std::abs(acc(pred, truth) - brute_force_acc(pred, truth)) > 1e-12) ++acc_mismatches;
        }
      }
    }
  }

  // Assignment solver vs exhaustive minimum on random 6x6 costs.
  std::mt19937_64 rng(6066);
  int hungarian_mismatches = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const Matrix cost = random_matrix(6, 6, rng);
    const Assignment got = hungarian(cost);
    IntVector perm = {0, 1, 2, 3, 4, 5};
    double best = std::numeric_limits<double>::infinity();
    do {
      double total = 0.0;
      for (int i = 0; i < 6; ++i) total += cost(i, perm[static_cast<std::size_t>(i)]);
      best = std::min(best, total);
    } while (std::next_permutation(perm.begin(), perm.end()));
    if (std::abs(got.total_cost - best) > 1e-9) ++hungarian_mismatches;
  }

  const double ari_value = ari({0, 0, 1, 1}, {0, 1, 0, 1});
  const bool ari_ok = std::abs(ari_value - (-1.0 / 3.0)) <= 1e-12;
  const double nmi_value = nmi({0, 0, 1, 1}, {0, 1, 0, 1});
  const bool nmi_ok = std::abs(nmi_value) <= 1e-12;

  const double secs = elapsed(start);
  const bool pass =
      acc_mismatches == 0 && hungarian_mismatches == 0 && ari_ok && nmi_ok && secs < 120.0;
  report(6, pass, "acc oracle " + std::to_string(acc_mismatches) + "/" + std::to_string(acc_checked) +
                      " mismatches, assignment oracle " + std::to_string(hungarian_mismatches) +
                      "/100 mismatches, ari = " + fmt(ari_value, 12) + " (want -1/3 = " +
                      fmt(-1.0 / 3.0, 12) + "), nmi = " + fmt(nmi_value, 12) + " (want 0)", secs);
}

// ---------------------------------------------------------------------------
// Criteria 7, 9, 11 share one experiment: five seeds of the full objective on
// the reference synthetic dataset, plus five seeds of each reduced objective.
// ---------------------------------------------------------------------------

TrainConfig reference_config() {
  TrainConfig cfg;
  cfg.d = 64;
  cfg.hidden_dims = {128, 128};
  cfg.proj_dims = {64, 64, 16};
  cfg.epochs = 100;
  cfg.batch_size = 128;
  cfg.lr = 5e-4;
  cfg.lambda1 = 100.0;
  cfg.lambda2 = 40.0;
  cfg.tau = 0.2;
  cfg.seed = 7;
  return cfg;
}

struct ReferenceRun {
  std::vector<double> full_acc;
  std::vector<double> rec_vda_acc;
  std::vector<double> rec_only_acc;
  std::vector<double> purity;
  std::vector<TrainLogRow> first_log;
};

ReferenceRun run_reference_experiment() {
  const MultiViewDataset base = generate_synthetic(1000, 5, {20, 15}, 4.0, 0.3, 42);
  const MultiViewDataset ds = apply_partial_alignment(base, 0.5, 7);
  const TrainConfig cfg = reference_config();

  ReferenceRun out;
  for (int r = 0; r < 5; ++r) {
    TrainConfig run_cfg = cfg;
    run_cfg.seed = cfg.seed + static_cast<std::uint64_t>(r);
    const TrainedModel model = train(ds, run_cfg);
    const EvaluationResult ev = evaluate(model, ds);
    out.full_acc.push_back(ev.metrics.acc);
    out.purity.push_back(ev.graphs.at(0).purity);
    if (r == 0) out.first_log = model.log;
  }
  const auto rows = run_ablation_suite(ds, cfg, {"rec_only", "rec_vda"}, 5);
  for (const auto& row : rows) {
    auto& slot = row.variant == "rec_only" ? out.rec_only_acc : out.rec_vda_acc;
    for (const Metrics& m : row.runs) slot.push_back(m.acc);
  }
  return out;
}

void criterion_7(const ReferenceRun& run, double secs) {
  const double full = median(run.full_acc);
  const double vda = median(run.rec_vda_acc);
  const double rec = median(run.rec_only_acc);
  const bool pass = full >= vda && vda >= rec && (full - rec) >= 0.10 && full >= 0.90 &&
                    secs < 15.0 * 60.0;
  report(7, pass, "median acc full " + fmt(full) + " >= rec+alignment " + fmt(vda) +
                      " >= reconstruction-only " + fmt(rec) + ", gap " + fmt(full - rec) +
                      " (need >= 0.10), full >= 0.90", secs);
}

void criterion_9(const ReferenceRun& run) {
  const auto start = Clock::now();
  const double purity = median(run.purity);
  const bool pass = purity >= 0.90;
  std::ostringstream per_seed;
  for (std::size_t i = 0; i < run.purity.size(); ++i)
    per_seed << (i ? " " : "") << fmt(run.purity[i], 3);
  report(9, pass, "weight-weighted same-class edge fraction of the global graph, median " +
                      fmt(purity) + " (per seed: " + per_seed.str() + "), need >= 0.90",
         elapsed(start));
}

void criterion_11(const ReferenceRun& run) {
  const auto start = Clock::now();
  const auto& log = run.first_log;
  const double first = log.front().losses.total;
  const double last = log.back().losses.total;
  int window_violations = 0;
  for (std::size_t e = 0; e + 50 < log.size(); ++e)
    if (log[e + 50].losses.total > 1.05 * log[e].losses.total) ++window_violations;
  const bool pass = last < first && window_violations == 0;
  report(11, pass, "epoch-mean total loss " + fmt(first, 3) + " -> " + fmt(last, 3) +
                       ", 50-epoch windows over 5% tolerance: " + std::to_string(window_violations),
         elapsed(start));
}

// ---------------------------------------------------------------------------
// Criterion 8: alignment-rate robustness.
// ---------------------------------------------------------------------------

void criterion_8() {
  const auto start = Clock::now();
  const MultiViewDataset base = generate_synthetic(1000, 5, {20, 15}, 4.0, 0.3, 42);
  const auto rows = sweep_alignment(base, reference_config(), {0.3, 0.5, 0.7, 1.0}, 5);
  double at_03 = 0.0, at_10 = 0.0;
  std::ostringstream all;
  for (const auto& row : rows) {
    std::vector<double> accs;
    for (const Metrics& m : row.runs) accs.push_back(m.acc);
    const double med = median(accs);
    all << " eta" << fmt(row.eta, 1) << "=" << fmt(med);
    if (row.eta == 0.3) at_03 = med;
    if (row.eta == 1.0) at_10 = med;
  }
  const double secs = elapsed(start);
  const bool pass = std::abs(at_03 - at_10) <= 0.10 && secs < 30.0 * 60.0;
  report(8, pass, "median acc" + all.str() + "; |eta0.3 - eta1.0| = " + fmt(std::abs(at_03 - at_10)) +
                      " (need <= 0.10)", secs);
}

// ---------------------------------------------------------------------------
// Criterion 10: neighbor-weighted matching vs nearest-neighbor re-pairing on
// a harder heterogeneous dataset.
// ---------------------------------------------------------------------------

void criterion_10() {
  const auto start = Clock::now();
  const MultiViewDataset base = generate_synthetic(1000, 5, {20, 15}, 3.0, 0.6, 43);
  const MultiViewDataset ds = apply_partial_alignment(base, 0.5, 7);
  const TrainConfig cfg = reference_config();
  std::vector<double> semantic, euclidean;
  for (int r = 0; r < 5; ++r) {
    TrainConfig run_cfg = cfg;
    run_cfg.seed = cfg.seed + static_cast<std::uint64_t>(r);
    const TrainedModel model = train(ds, run_cfg);
    const MatchingComparison cmp = compare_matching(model, ds);
    semantic.push_back(cmp.semantic.acc);
    euclidean.push_back(cmp.euclidean.acc);
  }
  const double sem = median(semantic);
  const double euc = median(euclidean);
  const double secs = elapsed(start);
  const bool pass = sem >= euc;
  report(10, pass, "median acc, neighbor-weighted fusion " + fmt(sem) +
                       " vs nearest-neighbor re-pairing " + fmt(euc) +
                       " (distinct random view maps, sep 3, noise 0.6)", secs);
}

// ---------------------------------------------------------------------------
// Criterion 12: byte-identical metrics across identical runs.
// ---------------------------------------------------------------------------

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

void criterion_12() {
  const auto start = Clock::now();
  const fs::path root = fs::temp_directory_path() / "smclust_acceptance_determinism";
  fs::remove_all(root);
  fs::create_directories(root);
  const MultiViewDataset base = generate_synthetic(1000, 5, {20, 15}, 4.0, 0.3, 42);
  write_dataset(base, root / "data", "csv");

  TrainOptions opts;
  opts.data_dir = root / "data";
  opts.eta = 0.5;
  opts.align_seed = 7;
  opts.config = reference_config();
  opts.config.epochs = 10;

  opts.out_dir = root / "run_a";
  cmd_train(opts);
  opts.out_dir = root / "run_b";
  cmd_train(opts);

  const bool metrics_same = slurp(root / "run_a" / "metrics.json") ==
                            slurp(root / "run_b" / "metrics.json");
  const bool checkpoint_same = slurp(root / "run_a" / "checkpoint.bin") ==
                               slurp(root / "run_b" / "checkpoint.bin");
  fs::remove_all(root);
  const bool pass = metrics_same;
  report(12, pass, std::string("metrics.json byte-identical: ") + (metrics_same ? "yes" : "no") +
                       ", checkpoint.bin byte-identical: " + (checkpoint_same ? "yes" : "no"),
         elapsed(start));
}

}  // namespace

int main() {
  std::cout << "acceptance battery (single process, deterministic seeds)" << std::endl;
  criterion_1();
  criterion_2();
  criterion_3();
  criterion_4();
  criterion_5();
  criterion_6();

  const auto ref_start = Clock::now();
  const ReferenceRun ref = run_reference_experiment();
  criterion_7(ref, elapsed(ref_start));
  criterion_8();
  criterion_9(ref);
  criterion_10();
  criterion_11(ref);
  criterion_12();

  std::cout << "ACCEPTANCE: " << (12 - g_failures) << "/12 criteria passed" << std::endl;
  return g_failures == 0 ? 0 : 1;
}
