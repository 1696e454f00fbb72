#include <omp.h>

#include <iostream>

#include "CLI11.hpp"
#include "commands.hpp"
#include "sgr/errors.hpp"
#include "sgr/log.hpp"

namespace {

namespace fs = std::filesystem;
using namespace sgr;

// Paths in a config file are relative to the file, not to the caller's cwd.
void anchor_paths(Config& cfg, const fs::path& config_file) {
  const fs::path base = config_file.parent_path();
  for (const char* key : {"train_dir", "checkpoint", "log"}) {
    if (!cfg.has(key)) continue;
    const fs::path p = cfg.get_string(key, "");
    if (p.is_relative()) cfg.set(key, (base / p).lexically_normal().string());
  }
}

// Flags shared by every subcommand that builds or scores a model.
struct ModelFlags {
  int hop = 0, iters = 0, dim = 0, batch = 0, neg = 0, workers = 0;
  double lr = 0, margin = 0;
  std::uint64_t seed = 0;
  CLI::Option *hop_opt, *iters_opt, *dim_opt, *lr_opt, *margin_opt, *batch_opt, *neg_opt,
      *seed_opt, *workers_opt;
  bool undirected = false, no_edge_update = false, no_attention = false, grail_attention = false;
  bool require_subgraph = false;
  CLI::Option* require_opt;

  void add(CLI::App* app) {
    hop_opt = app->add_option("--hop", hop, "Subgraph radius h");
    iters_opt = app->add_option("--iters", iters, "Message-passing iterations");
    dim_opt = app->add_option("--dim", dim, "Embedding width");
    lr_opt = app->add_option("--lr", lr, "Adam learning rate");
    margin_opt = app->add_option("--margin", margin, "Hinge margin");
    batch_opt = app->add_option("--batch", batch, "Positives per batch");
    neg_opt = app->add_option("--neg", neg, "Negatives per positive");
    seed_opt = app->add_option("--seed", seed, "Random seed");
    workers_opt = app->add_option("--workers", workers, "Worker threads (default: all cores)");
    require_opt = app->add_flag("--require-subgraph,!--no-require-subgraph", require_subgraph,
                                "Only draw negatives that have an enclosing subgraph");
    app->add_flag("--undirected", undirected, "Force undirected subgraph extraction");
    app->add_flag("--no-edge-update", no_edge_update, "Disable edge updates");
    app->add_flag("--no-attention", no_attention, "Disable edge attention");
    app->add_flag("--grail-attention", grail_attention, "Relation-only attention");
  }

  void apply(Config& cfg) const {
    auto put = [&](CLI::Option* o, const char* key, const std::string& v) {
      if (o->count() > 0) cfg.set(key, v);
    };
    put(hop_opt, "hop", std::to_string(hop));
    put(iters_opt, "iters", std::to_string(iters));
    put(dim_opt, "dim", std::to_string(dim));
    put(lr_opt, "lr", lr_opt->as<std::string>());
    put(margin_opt, "margin", margin_opt->as<std::string>());
    put(batch_opt, "batch_size", std::to_string(batch));
    put(neg_opt, "negatives_per_positive", std::to_string(neg));
    put(seed_opt, "seed", std::to_string(seed));
    put(workers_opt, "workers", std::to_string(workers));
    put(require_opt, "require_subgraph", require_subgraph ? "true" : "false");
    if (undirected) cfg.set("undirected", "true");
    if (no_edge_update) cfg.set("edge_update", "false");
    if (no_attention && grail_attention) {
      throw ConfigError("--no-attention and --grail-attention are exclusive");
    }
    if (no_attention) cfg.set("attention", "none");
    if (grail_attention) cfg.set("attention", "relation");
  }
};

int run(int argc, char** argv) {
  CLI::App app{"Inductive link prediction over directed enclosing subgraphs"};
  app.require_subcommand(1);
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "Log progress to stderr");

  // preprocess
  app::PreprocessOptions pre;
  auto* pre_cmd = app.add_subcommand("preprocess", "Filter queries and materialize negatives");
  pre_cmd->add_option("dataset", pre.dataset, "Dataset directory")->required();
  pre_cmd->add_option("-o,--out", pre.out, "Output directory")->required();
  pre_cmd->add_option("--hop", pre.hop, "Subgraph radius h");
  pre_cmd->add_option("--seed", pre.seed, "Random seed");
  pre_cmd->add_option("--neg", pre.negatives, "Negatives per query");
  pre_cmd->add_option("--max-nodes", pre.max_nodes, "Subgraph node cap");
  int pre_workers = 0;
  pre_cmd->add_option("--workers", pre_workers, "Worker threads");

  // train
  fs::path config_file;
  fs::path train_dir, checkpoint, log_file;
  int epochs = 0, runs = 0;
  ModelFlags train_flags;
  auto* train_cmd = app.add_subcommand("train", "Train a model from a config file");
  train_cmd->add_option("config", config_file, "key=value config file")->check(CLI::ExistingFile);
  auto* train_dir_opt = train_cmd->add_option("--train-dir", train_dir, "Dataset directory");
  auto* ckpt_opt = train_cmd->add_option("--checkpoint", checkpoint, "Output checkpoint");
  auto* log_opt = train_cmd->add_option("--log", log_file, "Training log file");
  auto* epochs_opt = train_cmd->add_option("--epochs", epochs, "Maximum epochs");
  auto* runs_opt = train_cmd->add_option("--runs", runs, "Independent runs with seeds seed..seed+runs-1");
  train_flags.add(train_cmd);

  // eval
  app::EvalOptions ev;
  std::string protocol = "auc-one-negative", negative_mode = "mix";
  bool eval_undirected = false, eval_require = false;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate checkpoints on a test directory");
  eval_cmd->add_option("-c,--checkpoint", ev.checkpoints, "Checkpoint; repeat to average runs")
      ->required()
      ->allow_extra_args(false);
  eval_cmd->add_option("test_dir", ev.test_dir, "Directory with train.txt graph and test.txt")
      ->required();
  eval_cmd->add_option("--test-file", ev.test_file, "Query file (default: <test_dir>/test.txt)");
  eval_cmd->add_option("--protocol", protocol, "auc-one-negative | hits-k | exchange-ht");
  eval_cmd->add_option("--negative-mode", negative_mode, "mix | head | tail");
  eval_cmd->add_option("--neg", ev.protocol.num_negatives, "Negatives per query for hits-k");
  eval_cmd->add_option("--k", ev.protocol.k, "Hits cutoff");
  eval_cmd->add_option("--seed", ev.protocol.seed, "Negative sampling seed");
  eval_cmd->add_option("--max-nodes", ev.protocol.extract.max_nodes, "Subgraph node cap");
  eval_cmd->add_option("--workers", ev.protocol.workers, "Worker threads");
  eval_cmd->add_flag("--require-subgraph", eval_require, "Only negatives with a subgraph");
  eval_cmd->add_flag("--undirected", eval_undirected, "Force undirected extraction");
  eval_cmd->add_option("--report", ev.report, "Write the summary here");
  eval_cmd->add_option("--scores", ev.scores, "Write per-candidate scores (TSV)");

  // score
  app::ScoreOptions sc;
  auto* score_cmd = app.add_subcommand("score", "Score one triplet");
  score_cmd->add_option("-c,--checkpoint", sc.checkpoint, "Checkpoint")->required();
  score_cmd->add_option("-g,--graph", sc.graph, "Graph triplet file")->required();
  score_cmd->add_option("triplet", sc.triplet, "'head relation tail'")->required();
  score_cmd->add_flag("--undirected", sc.force_undirected, "Force undirected extraction");
  score_cmd->add_option("--max-nodes", sc.max_nodes, "Subgraph node cap");

  // stats
  app::StatsOptions st;
  auto* stats_cmd = app.add_subcommand("stats", "Dataset and subgraph statistics");
  stats_cmd->add_option("dataset", st.dataset, "Dataset directory")->required();
  stats_cmd->add_option("--hop", st.hop, "Subgraph radius h");
  stats_cmd->add_option("--max-nodes", st.max_nodes, "Subgraph node cap");

  // synth
  app::SynthOptions sy;
  auto* synth_cmd = app.add_subcommand("synth", "Write a synthetic chain dataset");
  synth_cmd->add_option("-o,--out", sy.out, "Parent directory")->required();
  synth_cmd->add_option("--name", sy.name, "Dataset name");
  synth_cmd->add_option("--chains", sy.chains, "Number of chains");
  synth_cmd->add_option("--length", sy.length, "Chain length");
  synth_cmd->add_option("--stray", sy.stray, "Queries without any enclosing subgraph");
  synth_cmd->add_option("--seed", sy.seed, "Random seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }
  if (verbose) sgr::log::set_level(sgr::log::Level::Info);

  if (*pre_cmd) {
    if (pre_workers > 0) omp_set_num_threads(pre_workers);
    app::preprocess(pre, std::cout);
  } else if (*train_cmd) {
    Config cfg;
    if (!config_file.empty()) {
      cfg = Config::load(config_file);
      anchor_paths(cfg, config_file);
    }
    if (train_dir_opt->count() > 0) cfg.set("train_dir", train_dir.string());
    if (ckpt_opt->count() > 0) cfg.set("checkpoint", checkpoint.string());
    if (log_opt->count() > 0) cfg.set("log", log_file.string());
    if (epochs_opt->count() > 0) cfg.set("epochs", std::to_string(epochs));
    if (runs_opt->count() > 0) cfg.set("runs", std::to_string(runs));
    train_flags.apply(cfg);
    const auto settings = app::train_settings(cfg);
    if (settings.train.workers > 0) omp_set_num_threads(settings.train.workers);
    app::train(settings, std::cout);
  } else if (*eval_cmd) {
    ev.protocol.protocol = parse_protocol(protocol);
    ev.protocol.negative_mode = parse_negative_mode(negative_mode);
    ev.protocol.require_subgraph = eval_require;
    ev.protocol.force_undirected = eval_undirected;
    if (ev.protocol.workers > 0) omp_set_num_threads(ev.protocol.workers);
    app::eval(ev, std::cout);
  } else if (*score_cmd) {
    app::score(sc, std::cout);
  } else if (*stats_cmd) {
    app::stats(st, std::cout);
  } else if (*synth_cmd) {
    app::synth(sy, std::cout);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const sgr::ConfigError& e) {
    std::cerr << "sgr: " << e.category() << ": " << e.what() << '\n';
    return 2;
  } catch (const sgr::Error& e) {
    std::cerr << "sgr: " << e.category() << ": " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "sgr: unexpected error: " << e.what() << '\n';
    return 1;
  }
}
