#include "doctest.h"

#include "smclust/trainer.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>

using namespace smclust;
namespace fs = std::filesystem;

namespace {

TrainConfig tiny_config() {
  TrainConfig cfg;
  cfg.d = 4;
  cfg.hidden_dims = {16};
  cfg.epochs = 5;
  cfg.batch_size = 20;
  cfg.lr = 1e-3;
  cfg.lambda1 = 1.0;
  cfg.lambda2 = 0.5;
  cfg.tau = 0.5;
  cfg.seed = 3;
  cfg.kmeans_restarts = 4;
  return cfg;
}

MultiViewDataset tiny_dataset(std::uint64_t seed = 1) {
  return generate_synthetic(60, 3, {6, 5}, 5.0, 0.1, seed);
}

}  // namespace

TEST_SUITE("trainer") {

TEST_CASE("config validation rejects out-of-range values") {
  TrainConfig cfg = tiny_config();
  cfg.batch_size = 1;
  CHECK_THROWS_AS(cfg.validate(), config_error);
  cfg = tiny_config();
  cfg.tau = 0.0;
  CHECK_THROWS_AS(cfg.validate(), config_error);
  cfg = tiny_config();
  cfg.lambda1 = -1.0;
  CHECK_THROWS_AS(cfg.validate(), config_error);
  cfg = tiny_config();
  cfg.d = 1;
  CHECK_THROWS_AS(cfg.validate(), config_error);
  cfg = tiny_config();
  cfg.ablations = {"not_a_switch"};
  CHECK_THROWS_AS(cfg.validate(), config_error);
  cfg = tiny_config();
  cfg.proj_dims = {5, 4};  // must start at the latent width
  CHECK_THROWS_AS(cfg.validate(), config_error);
  cfg.proj_dims = {4};
  CHECK_THROWS_AS(cfg.validate(), config_error);
  cfg.proj_dims = {4, 0};
  CHECK_THROWS_AS(cfg.validate(), config_error);
  cfg.proj_dims = {4, 8, 3};
  CHECK_NOTHROW(cfg.validate());
}

TEST_CASE("config text parsing handles comments and rejects unknown keys") {
  const auto kv = parse_config_text("# a comment\nd = 8\n\nlr = 0.001\n");
  CHECK(kv.at("d") == "8");
  CHECK(kv.at("lr") == "0.001");
  CHECK_THROWS_AS((void)apply_config_kv({{"mystery", "1"}}, TrainConfig{}), config_error);
  CHECK_THROWS_AS((void)parse_config_text("novalue\n"), config_error);
}

TEST_CASE("config round-trips through its key-value form") {
  TrainConfig cfg = tiny_config();
  cfg.ablations = {"no_cma", "graph_on_projection"};
  cfg.proj_dims = {4, 6, 2};
  const TrainConfig back = apply_config_kv(config_to_kv(cfg), TrainConfig{});
  CHECK(back.d == cfg.d);
  CHECK(back.hidden_dims == cfg.hidden_dims);
  CHECK(back.proj_dims == cfg.proj_dims);
  CHECK(back.epochs == cfg.epochs);
  CHECK(back.batch_size == cfg.batch_size);
  CHECK(back.lr == cfg.lr);
  CHECK(back.lambda1 == cfg.lambda1);
  CHECK(back.lambda2 == cfg.lambda2);
  CHECK(back.tau == cfg.tau);
  CHECK(back.seed == cfg.seed);
  CHECK(back.ablations == cfg.ablations);
  CHECK(back.rec_batch_scaling == cfg.rec_batch_scaling);
}

TEST_CASE("objective variants map to ablation sets") {
  CHECK(variant_ablations("full").empty());
  CHECK(variant_ablations("rec_only") == std::set<std::string>{"no_vda", "no_smc"});
  CHECK(variant_ablations("rec_vda") == std::set<std::string>{"no_smc"});
  CHECK(variant_ablations("rec_smc") == std::set<std::string>{"no_vda"});
  CHECK(variant_ablations("no_guidance") == std::set<std::string>{"no_guidance"});
  CHECK_THROWS_AS((void)variant_ablations("everything"), config_error);
  CHECK(known_ablations().count("epoch_graph") == 1);
  CHECK(known_ablations().size() == 8);
}

TEST_CASE("training runs, logs every epoch, and stays finite") {
  const MultiViewDataset ds = tiny_dataset();
  const TrainedModel model = train(ds, tiny_config());
  REQUIRE(model.log.size() == 5);
  for (const auto& row : model.log) {
    CHECK(std::isfinite(row.losses.total));
    CHECK(row.losses.rec >= 0.0);
    CHECK(std::abs(row.losses.vda - (row.losses.cfa + row.losses.cma)) <= 1e-10);
  }
  CHECK(model.encoders.size() == 2);
  CHECK(model.decoders.size() == 2);
  CHECK(model.projector.output_dim() == 4);
}

TEST_CASE("zero loss weights leave only the reconstruction term in the total") {
  // Components are still computed and logged for inspection; with both
  // weights at zero they must not contribute to the optimized total.
  TrainConfig cfg = tiny_config();
  cfg.lambda1 = 0.0;
  cfg.lambda2 = 0.0;
  const TrainedModel model = train(tiny_dataset(), cfg);
  for (const auto& row : model.log) {
    CHECK(std::isfinite(row.losses.vda));
    CHECK(std::isfinite(row.losses.smc));
    CHECK(row.losses.total == row.losses.rec);
  }
}

TEST_CASE("disabling both auxiliary terms logs them as zero") {
  TrainConfig cfg = tiny_config();
  cfg.ablations = {"no_vda", "no_smc"};
  const TrainedModel model = train(tiny_dataset(), cfg);
  for (const auto& row : model.log) {
    CHECK(row.losses.vda == 0.0);
    CHECK(row.losses.smc == 0.0);
    CHECK(row.losses.total == row.losses.rec);
  }
}

TEST_CASE("training is deterministic in the seed") {
  const MultiViewDataset ds = tiny_dataset();
  const TrainConfig cfg = tiny_config();
  const TrainedModel a = train(ds, cfg);
  const TrainedModel b = train(ds, cfg);
  CHECK((a.encoders[0].weights()[0] - b.encoders[0].weights()[0]).cwiseAbs().maxCoeff() == 0.0);
  CHECK((a.projector.weights()[0] - b.projector.weights()[0]).cwiseAbs().maxCoeff() == 0.0);
  const EvaluationResult ea = evaluate(a, ds);
  const EvaluationResult eb = evaluate(b, ds);
  CHECK(ea.metrics.acc == eb.metrics.acc);
  CHECK(ea.clusters.assignments == eb.clusters.assignments);
}

TEST_CASE("a custom projection head changes the embedding width") {
  TrainConfig cfg = tiny_config();
  cfg.proj_dims = {4, 6, 2};
  const MultiViewDataset ds = tiny_dataset();
  const TrainedModel model = train(ds, cfg);
  CHECK(model.projector.output_dim() == 2);
  const EvaluationResult ev = evaluate(model, ds);
  CHECK(ev.embeddings[0].cols() == 2);
  CHECK(ev.fused.fused.cols() == 4);  // two views, head width 2
}

TEST_CASE("evaluation produces one graph per non-anchor view with sane stats") {
  const MultiViewDataset ds = apply_partial_alignment(tiny_dataset(), 0.5, 21);
  const TrainedModel model = train(ds, tiny_config());
  const EvaluationResult ev = evaluate(model, ds);
  REQUIRE(ev.graphs.size() == 1);
  CHECK(ev.graphs[0].threshold.has_value());
  CHECK(*ev.graphs[0].threshold >= 0.0);
  CHECK(*ev.graphs[0].threshold < 1.0);
  CHECK(ev.graphs[0].purity >= 0.0);
  CHECK(ev.graphs[0].purity <= 1.0);
  CHECK(ev.metrics.acc >= 0.0);
  CHECK(ev.metrics.acc <= 1.0);
  CHECK(ev.k == 3);
  for (Eigen::Index i = 0; i < ev.embeddings[0].rows(); ++i) {
    const double norm = ev.embeddings[0].row(i).norm();
    CHECK((std::abs(norm - 1.0) <= 1e-9 || norm == 0.0));
  }
}

TEST_CASE("interim evaluations are recorded when requested") {
  TrainConfig cfg = tiny_config();
  cfg.eval_every = 2;
  const TrainedModel model = train(tiny_dataset(), cfg);
  REQUIRE(model.interim.size() == 2);  // epochs 2 and 4 of 5
  CHECK(model.interim[0].first == 2);
  CHECK(model.interim[1].first == 4);
}

TEST_CASE("base ablations compose with variant switches") {
  const MultiViewDataset ds = apply_partial_alignment(tiny_dataset(), 0.6, 33);
  TrainConfig with_base = tiny_config();
  with_base.ablations = {"no_guidance"};
  const auto via_base = run_ablation_suite(ds, with_base, {"full"}, 1);
  const auto via_variant = run_ablation_suite(ds, tiny_config(), {"no_guidance"}, 1);
  CHECK(via_base[0].runs[0].acc == via_variant[0].runs[0].acc);
  CHECK(via_base[0].runs[0].nmi == via_variant[0].runs[0].nmi);
}

TEST_CASE("whole-dataset graphs per epoch train and evaluate cleanly") {
  TrainConfig cfg = tiny_config();
  cfg.ablations = {"epoch_graph"};
  const MultiViewDataset ds = apply_partial_alignment(tiny_dataset(), 0.5, 41);
  const TrainedModel model = train(ds, cfg);
  for (const auto& row : model.log) CHECK(std::isfinite(row.losses.total));
  const EvaluationResult ev = evaluate(model, ds);
  CHECK(std::isfinite(ev.metrics.acc));
  const TrainedModel again = train(ds, cfg);
  CHECK((model.encoders[0].weights()[0] - again.encoders[0].weights()[0]).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("ablation suite aggregates one row per variant") {
  const MultiViewDataset ds = apply_partial_alignment(tiny_dataset(), 0.5, 51);
  const auto rows = run_ablation_suite(ds, tiny_config(), {"rec_only", "full"}, 2);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].variant == "rec_only");
  CHECK(rows[0].runs.size() == 2);
  for (const auto& row : rows) {
    CHECK(row.mean.acc >= 0.0);
    CHECK(row.stddev.acc >= 0.0);
  }
}

TEST_CASE("alignment sweep covers the requested ratios") {
  const auto rows = sweep_alignment(tiny_dataset(), tiny_config(), {0.5, 1.0}, 2);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].eta == 0.5);
  CHECK(rows[1].eta == 1.0);
  for (const auto& row : rows) {
    CHECK(row.runs.size() == 2);
    CHECK(row.mean.acc >= 0.0);
  }
}

TEST_CASE("matching comparison reports both fusion paths") {
  const MultiViewDataset ds = apply_partial_alignment(tiny_dataset(), 0.5, 61);
  const TrainedModel model = train(ds, tiny_config());
  const MatchingComparison cmp = compare_matching(model, ds);
  for (const Metrics& m : {cmp.semantic, cmp.euclidean}) {
    CHECK(m.acc >= 0.0);
    CHECK(m.acc <= 1.0);
    CHECK(std::isfinite(m.nmi));
    CHECK(std::isfinite(m.ari));
  }
}

TEST_CASE("loss log writes one csv row per epoch") {
  const fs::path path = fs::temp_directory_path() / "smclust_test_loss_log.csv";
  const TrainedModel model = train(tiny_dataset(), tiny_config());
  write_loss_log(model.log, path);
  std::ifstream in(path);
  std::string line;
  int lines = 0;
  while (std::getline(in, line)) ++lines;
  CHECK(lines == 6);  // header + 5 epochs
  fs::remove(path);
}

TEST_CASE("mean and spread aggregate run metrics") {
  const std::vector<Metrics> runs = {{0.5, 0.4, 0.3}, {0.7, 0.6, 0.5}};
  const Metrics mean = metrics_mean(runs);
  CHECK(mean.acc == doctest::Approx(0.6).epsilon(1e-12));
  const Metrics sd = metrics_stddev(runs, mean);
  CHECK(sd.acc == doctest::Approx(std::sqrt(0.02 / 1.0)).epsilon(1e-9));
}

}  // TEST_SUITE
