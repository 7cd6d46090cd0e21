// Command line front end for the multi-view clustering library: dataset
// generation, training, evaluation, ablation and alignment studies, and the
// built-in numerical selfcheck.

#include <smclust/commands.hpp>

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>

namespace {

using namespace smclust;

/// Options shared by every command that trains or evaluates models.
struct CommonModelFlags {
  std::string config_path;
  std::optional<int> d;
  std::optional<std::string> hidden;
  std::optional<std::string> proj_dims;
  std::optional<int> epochs;
  std::optional<int> batch_size;
  std::optional<double> lr;
  std::optional<double> lambda1;
  std::optional<double> lambda2;
  std::optional<double> tau;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> ablations;
  std::optional<int> eval_every;
  std::optional<int> kmeans_restarts;
  std::optional<int> threads;
};

void add_model_flags(CLI::App* cmd, CommonModelFlags& f) {
  cmd->add_option("--config", f.config_path, "key = value configuration file");
  cmd->add_option("--latent-dim", f.d, "embedding dimension");
  cmd->add_option("--hidden", f.hidden, "comma separated hidden layer widths");
  cmd->add_option("--proj-dims", f.proj_dims, "projector layer dims, e.g. 64,64,16");
  cmd->add_option("--epochs", f.epochs, "training epochs");
  cmd->add_option("--batch-size", f.batch_size, "mini-batch size");
  cmd->add_option("--lr", f.lr, "Adam learning rate");
  cmd->add_option("--lambda1", f.lambda1, "distribution alignment weight");
  cmd->add_option("--lambda2", f.lambda2, "contrastive weight");
  cmd->add_option("--tau", f.tau, "contrastive temperature");
  cmd->add_option("--seed", f.seed, "base random seed");
  cmd->add_option("--ablations", f.ablations, "comma separated ablation switches");
  cmd->add_option("--eval-every", f.eval_every, "interim evaluation period (0 = off)");
  cmd->add_option("--kmeans-restarts", f.kmeans_restarts, "k-means restarts");
  cmd->add_option("--threads", f.threads, "worker threads for k-means restarts");
}

/// Resolution order: built-in defaults, then the config file, then flags.
TrainConfig resolve_config(const CommonModelFlags& f) {
  TrainConfig cfg;
  if (!f.config_path.empty()) cfg = apply_config_kv(read_config_file(f.config_path), cfg);
  std::map<std::string, std::string> kv;
  if (f.d) kv["d"] = std::to_string(*f.d);
  if (f.hidden) kv["hidden_dims"] = *f.hidden;
  if (f.proj_dims) kv["proj_dims"] = *f.proj_dims;
  if (f.epochs) kv["epochs"] = std::to_string(*f.epochs);
  if (f.batch_size) kv["batch_size"] = std::to_string(*f.batch_size);
  if (f.lr) kv["lr"] = std::to_string(*f.lr);
  if (f.lambda1) kv["lambda1"] = std::to_string(*f.lambda1);
  if (f.lambda2) kv["lambda2"] = std::to_string(*f.lambda2);
  if (f.tau) kv["tau"] = std::to_string(*f.tau);
  if (f.seed) kv["seed"] = std::to_string(*f.seed);
  if (f.ablations) kv["ablations"] = *f.ablations;
  if (f.eval_every) kv["eval_every"] = std::to_string(*f.eval_every);
  if (f.kmeans_restarts) kv["kmeans_restarts"] = std::to_string(*f.kmeans_restarts);
  if (f.threads) kv["threads"] = std::to_string(*f.threads);
  if (!kv.empty()) cfg = apply_config_kv(kv, cfg);
  return cfg;
}

std::vector<double> parse_double_list(const std::string& text) {
  std::vector<double> out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::size_t comma = text.find(',', pos);
    const std::string tok = text.substr(pos, comma == std::string::npos ? comma : comma - pos);
    try {
      out.push_back(std::stod(tok));
    } catch (const std::exception&) {
      throw config_error("cannot parse number '" + tok + "'");
    }
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  if (out.empty()) throw config_error("empty number list");
  return out;
}

std::vector<std::string> parse_string_list(const std::string& text) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t comma = text.find(',', pos);
    const std::string tok = text.substr(pos, comma == std::string::npos ? comma : comma - pos);
    if (!tok.empty()) out.push_back(tok);
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  if (out.empty()) throw config_error("empty name list");
  return out;
}

int run(int argc, char** argv) {
  CLI::App app{"Partially aligned multi-view clustering toolkit"};
  app.require_subcommand(1);

  // --- gen-data ------------------------------------------------------------
  GenDataOptions gen;
  std::string gen_dims = "20,15";
  auto* gen_cmd = app.add_subcommand("gen-data", "write a synthetic multi-view dataset");
  gen_cmd->add_option("--n", gen.n, "samples");
  gen_cmd->add_option("--k", gen.k, "classes");
  gen_cmd->add_option("--views", gen.views, "view count");
  gen_cmd->add_option("--dims", gen_dims, "comma separated view dimensions");
  gen_cmd->add_option("--sep", gen.sep, "center separation");
  gen_cmd->add_option("--noise", gen.noise, "observation noise std");
  gen_cmd->add_option("--seed", gen.seed, "random seed");
  gen_cmd->add_option("--format", gen.format, "csv or bin");
  gen_cmd->add_option("--out", gen.out_dir, "output directory")->required();

  // --- train ---------------------------------------------------------------
  TrainOptions train_opts;
  CommonModelFlags train_flags;
  std::optional<std::uint64_t> train_align_seed;
  auto* train_cmd = app.add_subcommand("train", "train a model and evaluate it");
  train_cmd->add_option("--data", train_opts.data_dir, "dataset directory")->required();
  train_cmd->add_option("--eta", train_opts.eta, "aligned fraction to simulate");
  train_cmd->add_option("--align-seed", train_align_seed, "partial alignment seed");
  train_cmd->add_flag("--zscore", train_opts.zscore, "z-score view columns first");
  train_cmd->add_option("--out", train_opts.out_dir, "output directory")->required();
  add_model_flags(train_cmd, train_flags);

  // --- evaluate --------------------------------------------------------------
  EvaluateOptions eval_opts;
  std::optional<std::uint64_t> eval_align_seed;
  std::optional<int> eval_threads;
  auto* eval_cmd = app.add_subcommand("evaluate", "evaluate a saved checkpoint");
  eval_cmd->add_option("--data", eval_opts.data_dir, "dataset directory")->required();
  eval_cmd->add_option("--checkpoint", eval_opts.checkpoint, "checkpoint file")->required();
  eval_cmd->add_option("--eta", eval_opts.eta, "aligned fraction to simulate");
  eval_cmd->add_option("--align-seed", eval_align_seed, "partial alignment seed");
  eval_cmd->add_flag("--zscore", eval_opts.zscore, "z-score view columns first");
  eval_cmd->add_option("--threads", eval_threads, "worker threads for k-means restarts");
  eval_cmd->add_option("--out", eval_opts.out_dir, "output directory")->required();

  // --- ablate ----------------------------------------------------------------
  AblateOptions ablate_opts;
  CommonModelFlags ablate_flags;
  std::optional<std::uint64_t> ablate_align_seed;
  std::string ablate_variants;
  auto* ablate_cmd = app.add_subcommand("ablate", "train objective variants over several seeds");
  ablate_cmd->add_option("--data", ablate_opts.data_dir, "dataset directory")->required();
  ablate_cmd->add_option("--eta", ablate_opts.eta, "aligned fraction to simulate");
  ablate_cmd->add_option("--align-seed", ablate_align_seed, "partial alignment seed");
  ablate_cmd->add_flag("--zscore", ablate_opts.zscore, "z-score view columns first");
  ablate_cmd->add_option("--variants", ablate_variants, "comma separated variant names");
  ablate_cmd->add_option("--runs", ablate_opts.runs, "seeds per variant");
  ablate_cmd->add_option("--out", ablate_opts.out_dir, "output directory")->required();
  add_model_flags(ablate_cmd, ablate_flags);

  // --- sweep-alignment ---------------------------------------------------------
  SweepOptions sweep_opts;
  CommonModelFlags sweep_flags;
  std::string sweep_etas;
  auto* sweep_cmd = app.add_subcommand("sweep-alignment", "metrics across aligned fractions");
  sweep_cmd->add_option("--data", sweep_opts.data_dir, "fully aligned dataset directory")->required();
  sweep_cmd->add_flag("--zscore", sweep_opts.zscore, "z-score view columns first");
  sweep_cmd->add_option("--etas", sweep_etas, "comma separated aligned fractions");
  sweep_cmd->add_option("--runs", sweep_opts.runs, "runs per fraction");
  sweep_cmd->add_option("--out", sweep_opts.out_dir, "output directory")->required();
  add_model_flags(sweep_cmd, sweep_flags);

  // --- compare-matching ----------------------------------------------------
  CompareMatchingOptions cmp_opts;
  CommonModelFlags cmp_flags;
  std::optional<std::uint64_t> cmp_align_seed;
  auto* cmp_cmd =
      app.add_subcommand("compare-matching", "matched fusion vs nearest-feature re-pairing");
  cmp_cmd->add_option("--data", cmp_opts.data_dir, "dataset directory")->required();
  cmp_cmd->add_option("--eta", cmp_opts.eta, "aligned fraction to simulate");
  cmp_cmd->add_option("--align-seed", cmp_align_seed, "partial alignment seed");
  cmp_cmd->add_flag("--zscore", cmp_opts.zscore, "z-score view columns first");
  cmp_cmd->add_option("--runs", cmp_opts.runs, "training runs");
  cmp_cmd->add_option("--out", cmp_opts.out_dir, "output directory")->required();
  add_model_flags(cmp_cmd, cmp_flags);

  // --- selfcheck -------------------------------------------------------------
  SelfcheckOptions self_opts;
  auto* self_cmd = app.add_subcommand("selfcheck", "run the numerical verification battery");
  self_cmd->add_option("--out", self_opts.out_dir, "optional report directory");
  self_cmd->add_flag("--inject-gradient-bug", self_opts.inject_gradient_bug)->group("");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);  // prints help or the parse message
    return code == 0 ? kExitOk : kExitConfig;
  }

  if (gen_cmd->parsed()) {
    gen.dims.clear();
    for (double v : parse_double_list(gen_dims)) gen.dims.push_back(static_cast<int>(v));
    cmd_gen_data(gen);
    return kExitOk;
  }
  if (train_cmd->parsed()) {
    train_opts.config = resolve_config(train_flags);
    train_opts.align_seed = train_align_seed;
    cmd_train(train_opts);
    return kExitOk;
  }
  if (eval_cmd->parsed()) {
    eval_opts.align_seed = eval_align_seed;
    eval_opts.threads = eval_threads;
    cmd_evaluate(eval_opts);
    return kExitOk;
  }
  if (ablate_cmd->parsed()) {
    ablate_opts.config = resolve_config(ablate_flags);
    ablate_opts.align_seed = ablate_align_seed;
    if (!ablate_variants.empty()) ablate_opts.variants = parse_string_list(ablate_variants);
    cmd_ablate(ablate_opts);
    return kExitOk;
  }
  if (sweep_cmd->parsed()) {
    sweep_opts.config = resolve_config(sweep_flags);
    if (!sweep_etas.empty()) sweep_opts.etas = parse_double_list(sweep_etas);
    cmd_sweep_alignment(sweep_opts);
    return kExitOk;
  }
  if (cmp_cmd->parsed()) {
    cmp_opts.config = resolve_config(cmp_flags);
    cmp_opts.align_seed = cmp_align_seed;
    cmd_compare_matching(cmp_opts);
    return kExitOk;
  }
  if (self_cmd->parsed()) {
    return cmd_selfcheck(self_opts).all_pass ? kExitOk : kExitFailure;
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const smclust::config_error& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return smclust::kExitConfig;
  } catch (const smclust::data_error& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return smclust::kExitData;
  } catch (const smclust::numeric_error& e) {
    std::cerr << "numeric error: " << e.what() << '\n';
    return smclust::kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return smclust::kExitFailure;
  }
}
