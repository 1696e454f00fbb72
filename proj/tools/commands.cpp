#include "commands.hpp"

#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>

#include "sgr/checkpoint.hpp"
#include "sgr/datatools.hpp"
#include "sgr/errors.hpp"
#include "sgr/graph.hpp"
#include "sgr/subgraph.hpp"
#include "sgr/synthetic.hpp"
#include "sgr/text.hpp"

namespace sgr::app {
namespace {

void require_file(const fs::path& p) {
  if (!fs::is_regular_file(p)) throw IoError("missing file: " + p.string());
}

void write_text(const fs::path& file, const std::string& text) {
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + file.string());
  out << text;
  if (!out) throw IoError("write failed: " + file.string());
}

std::vector<std::string> echo_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) {
    if (!line.empty()) lines.push_back(line);
  }
  return lines;
}

Vocabularies relation_vocab(const std::vector<std::string>& names) {
  Vocabularies v;
  for (const auto& n : names) v.relations.intern(n);
  return v;
}

// Graph of an evaluation directory with relation ids pinned to a checkpoint.
Graph load_for_checkpoint(const fs::path& graph_file, const Checkpoint& ckpt,
                          std::span<const fs::path> query_files) {
  const auto vocab = relation_vocab(ckpt.relation_names);
  return load_graph(graph_file, VocabMode::Reuse, &vocab, query_files);
}

}  // namespace

std::vector<SplitSummary> preprocess(const PreprocessOptions& opts, std::ostream& out) {
  const fs::path graph_file = opts.dataset / kGraphFile;
  require_file(graph_file);
  if (opts.hop < 1) throw ConfigError("hop must be >= 1");
  fs::create_directories(opts.out);
  const Graph g = load_graph(graph_file, VocabMode::Build);
  write_triplets(opts.out / kGraphFile, g, g.triplets());
  const ExtractOptions xopts{opts.hop, opts.max_nodes};

  std::vector<SplitSummary> summary;
  for (const char* split : kQuerySplits) {
    const fs::path file = opts.dataset / (std::string(split) + ".txt");
    if (!fs::is_regular_file(file)) continue;
    const auto queries = read_triplets(file, g);
    const auto filtered = filter_nonempty(g, queries, xopts);
    write_triplets(opts.out / (std::string(split) + ".txt"), g, filtered.kept);
    const auto negs = materialize_negatives(g, filtered.kept, opts.negatives, xopts, opts.seed);
    write_negatives(opts.out / (std::string(split) + "_neg.txt"),
                    opts.out / (std::string(split) + "_neg.idx"), g, filtered.kept, negs);
    SplitSummary s{split, filtered.kept.size(), filtered.dropped, negs.negatives.size(),
                   negs.shortfalls.size()};
    for (const auto pos : negs.shortfalls) {
      out << "shortfall split=" << split << " position=" << pos << " triplet="
          << g.describe(filtered.kept[pos]) << '\n';
    }
    out << "split=" << s.name << " kept=" << s.kept << " dropped=" << s.dropped
        << " negatives=" << s.negatives << " shortfalls=" << s.shortfalls << '\n';
    summary.push_back(s);
  }
  std::ostringstream echo;
  echo << "hop=" << opts.hop << "\nnegatives=" << opts.negatives << "\nseed=" << opts.seed
       << "\nmax_nodes=" << opts.max_nodes << '\n';
  write_text(opts.out / "preprocess.cfg", echo.str());
  return summary;
}

std::vector<std::string_view> train_config_keys() {
  return {"train_dir", "checkpoint", "log", "hop", "iters", "dim", "f1", "f2", "edge_dropout",
          "score_hidden", "attention", "edge_update", "relation_in_edge_update", "lr", "epochs",
          "batch_size", "margin", "negatives_per_positive", "seed", "patience",
          "require_subgraph", "clip_norm", "undirected", "max_nodes", "max_retries",
          "log_timestamps", "workers", "merge_valid_into_graph", "runs"};
}

TrainSettings train_settings(const Config& cfg) {
  const auto keys = train_config_keys();
  cfg.require_known(keys);
  TrainSettings s;
  ModelConfig& m = s.model;
  m.hop = cfg.get_int("hop", m.hop);
  m.iters = cfg.get_int("iters", m.iters);
  m.dim = cfg.get_int("dim", m.dim);
  m.f1 = parse_activation(cfg.get_string("f1", to_string(m.f1)));
  m.f2 = parse_activation(cfg.get_string("f2", to_string(m.f2)));
  m.edge_dropout = cfg.get_double("edge_dropout", m.edge_dropout);
  m.score_hidden = cfg.get_int("score_hidden", m.score_hidden);
  m.attention = parse_attention(cfg.get_string("attention", to_string(m.attention)));
  m.edge_update = cfg.get_bool("edge_update", m.edge_update);
  m.relation_in_edge_update = cfg.get_bool("relation_in_edge_update", m.relation_in_edge_update);
  TrainConfig& t = s.train;
  t.lr = cfg.get_double("lr", t.lr);
  t.epochs = cfg.get_int("epochs", t.epochs);
  t.batch_size = cfg.get_int("batch_size", t.batch_size);
  t.margin = cfg.get_double("margin", t.margin);
  t.negatives_per_positive = cfg.get_int("negatives_per_positive", t.negatives_per_positive);
  t.seed = cfg.get_u64("seed", t.seed);
  t.patience = cfg.get_int("patience", t.patience);
  t.require_subgraph = cfg.get_bool("require_subgraph", t.require_subgraph);
  t.clip_norm = cfg.get_double("clip_norm", t.clip_norm);
  t.force_undirected = cfg.get_bool("undirected", t.force_undirected);
  t.max_nodes = cfg.get_int("max_nodes", t.max_nodes);
  t.max_retries = cfg.get_int("max_retries", t.max_retries);
  t.log_timestamps = cfg.get_bool("log_timestamps", t.log_timestamps);
  t.workers = cfg.get_int("workers", t.workers);
  s.merge_valid_into_graph = cfg.get_bool("merge_valid_into_graph", false);
  s.runs = cfg.get_int("runs", 1);
  if (!cfg.has("train_dir")) throw ConfigError("config needs train_dir");
  if (!cfg.has("checkpoint")) throw ConfigError("config needs checkpoint");
  s.train_dir = cfg.get_string("train_dir", "");
  s.checkpoint = cfg.get_string("checkpoint", "");
  s.log = cfg.get_string("log", "");
  if (s.runs < 1) throw ConfigError("runs must be >= 1");
  m.validate();
  t.validate();
  s.echo = cfg.echo();
  return s;
}

std::vector<fs::path> train(const TrainSettings& s, std::ostream& out) {
  const fs::path graph_file = s.train_dir / kGraphFile;
  const fs::path valid_file = s.train_dir / "valid.txt";
  require_file(graph_file);
  const bool has_valid = fs::is_regular_file(valid_file);

  Graph g;
  std::vector<Triplet> valid;
  if (has_valid && s.merge_valid_into_graph) {
    // Valid facts join the graph; they stay validation targets, hidden from
    // their own subgraphs like every other target.
    const Graph base = load_graph(graph_file, VocabMode::Build, nullptr, {&valid_file, 1});
    Vocabularies vocab = base.vocabularies();
    auto parsed = parse_triplet_file(valid_file, vocab, true, false);
    auto all = base.triplets();
    all.insert(all.end(), parsed.triplets.begin(), parsed.triplets.end());
    g = Graph(std::move(all), std::move(vocab));
    valid = std::move(parsed.triplets);
  } else {
    g = load_graph(graph_file, VocabMode::Build, nullptr,
                   has_valid ? std::span<const fs::path>(&valid_file, 1)
                             : std::span<const fs::path>());
    if (has_valid) valid = read_triplets(valid_file, g);
  }

  std::vector<fs::path> outputs;
  for (int run = 0; run < s.runs; ++run) {
    TrainConfig tc = s.train;
    tc.seed = s.train.seed + static_cast<std::uint64_t>(run);
    fs::path ckpt = s.checkpoint;
    fs::path log = s.log;
    if (s.runs > 1) {
      const std::string suffix = ".seed" + std::to_string(tc.seed);
      ckpt += suffix;
      if (!log.empty()) log += suffix;
    }
    std::ostringstream progress;
    auto result = sgr::train(g, valid, s.model, tc, &progress);
    const std::string echo = s.echo + "seed_used=" + std::to_string(tc.seed) + "\n";
    if (ckpt.has_parent_path()) fs::create_directories(ckpt.parent_path());
    save_checkpoint(ckpt, result.model, g.relations().names(), echo);
    if (!log.empty()) {
      if (log.has_parent_path()) fs::create_directories(log.parent_path());
      std::string text;
      for (const auto& line : echo_lines(echo)) text += "config " + line + "\n";
      for (const auto& line : result.log) text += line + "\n";
      write_text(log, text);
    }
    out << "run seed=" << tc.seed << " epochs=" << result.epochs_run
        << " best_epoch=" << result.best_epoch
        << " best_valid_auc_pr=" << exact(result.best_valid_auc_pr)
        << " positives=" << result.positives_used << " skipped=" << result.positives_skipped
        << " checkpoint=" << ckpt.string() << '\n';
    outputs.push_back(ckpt);
  }
  return outputs;
}

EvalReport eval(const EvalOptions& opts, std::ostream& out) {
  if (opts.checkpoints.empty()) throw ConfigError("eval needs at least one checkpoint");
  const fs::path graph_file = opts.test_dir / kGraphFile;
  const fs::path test_file = opts.test_file.empty() ? opts.test_dir / "test.txt" : opts.test_file;
  require_file(graph_file);
  require_file(test_file);

  std::vector<EvalReport> reports;
  std::string echo;
  std::optional<Graph> first_graph;
  for (const auto& path : opts.checkpoints) {
    const auto ckpt = load_checkpoint(path);
    const Graph g = load_for_checkpoint(graph_file, ckpt, {&test_file, 1});
    const auto tests = read_triplets(test_file, g);
    const Model model = model_from_checkpoint(ckpt);
    ProtocolOptions p = opts.protocol;
    p.extract.hop = ckpt.config.hop;
    const auto scorer = model_scorer(g, model, p.extract, p.force_undirected);
    reports.push_back(run_protocol(g, tests, scorer, p));
    echo += "checkpoint=" + path.string() + "\n" + ckpt.config_echo;
    if (!first_graph) first_graph = g;
  }
  EvalReport report = average_reports(reports);
  std::ostringstream text;
  const auto& p = opts.protocol;
  text << "# eval protocol=" << to_string(p.protocol) << " negative_mode="
       << to_string(p.negative_mode) << " num_negatives=" << p.num_negatives << " k=" << p.k
       << " require_subgraph=" << p.require_subgraph << " undirected=" << p.force_undirected
       << " seed=" << p.seed << " runs=" << reports.size() << '\n';
  for (const auto& line : echo_lines(echo)) text << "# " << line << '\n';
  text << report.summary();
  out << text.str();
  if (!opts.report.empty()) write_text(opts.report, text.str());
  if (!opts.scores.empty()) write_scores(opts.scores, *first_graph, reports.front());
  return report;
}

double score(const ScoreOptions& opts, std::ostream& out) {
  const auto ckpt = load_checkpoint(opts.checkpoint);
  require_file(opts.graph);
  const Graph g = load_for_checkpoint(opts.graph, ckpt, {});
  std::istringstream in(opts.triplet);
  std::string h, r, t, extra;
  if (!(in >> h >> r >> t) || (in >> extra)) {
    throw ConfigError("triplet must be 'head relation tail', got '" + opts.triplet + "'");
  }
  const auto hid = g.entities().find(h);
  const auto rid = g.relations().find(r);
  const auto tid = g.entities().find(t);
  if (!hid) throw VocabularyError("unknown entity '" + h + "'");
  if (!rid) throw VocabularyError("unknown relation '" + r + "'");
  if (!tid) throw VocabularyError("unknown entity '" + t + "'");
  const Triplet target{*hid, *rid, *tid};
  const Model model = model_from_checkpoint(ckpt);
  const ExtractOptions xopts{ckpt.config.hop, opts.max_nodes};
  const auto ex = extract_enclosing(g, target, xopts, opts.force_undirected);
  const double s = model.score(ex);
  if (!ex.ok()) {
    out << "NOSUBGRAPH " << g.describe(target) << '\n'
        << "score=" << exact(s) << " (fixed score for candidates without an enclosing subgraph)\n";
    return s;
  }
  out << "score=" << exact(s) << '\n' << summarize(g, ex) << '\n';
  return s;
}

void stats(const StatsOptions& opts, std::ostream& out) {
  const fs::path graph_file = opts.dataset / kGraphFile;
  require_file(graph_file);
  std::vector<fs::path> query_files;
  for (const char* split : kQuerySplits) {
    const fs::path f = opts.dataset / (std::string(split) + ".txt");
    if (fs::is_regular_file(f)) query_files.push_back(f);
  }
  const Graph g = load_graph(graph_file, VocabMode::Build, nullptr, query_files);
  const ExtractOptions xopts{opts.hop, opts.max_nodes};
  out << "# stats hop=" << opts.hop << " max_nodes=" << opts.max_nodes << '\n';
  out << "[graph]\n" << dataset_stats(g, g.triplets(), xopts).to_string();
  for (const auto& f : query_files) {
    const auto q = read_triplets(f, g);
    out << "[" << f.stem().string() << "]\n" << dataset_stats(g, q, xopts).to_string();
  }
}

void synth(const SynthOptions& opts, std::ostream& out) {
  ChainOptions train;
  train.chains = opts.chains;
  train.length = opts.length;
  train.seed = opts.seed;
  train.stray_queries = opts.stray;
  const auto ds = make_chain_dataset(train);
  const fs::path dir = opts.out / opts.name;
  fs::create_directories(dir);
  write_named(dir / kGraphFile, ds.graph);
  write_named(dir / "valid.txt", ds.valid);
  write_named(dir / "test.txt", ds.test);

  ChainOptions ind = train;
  ind.prefix = "x";
  ind.seed = opts.seed + 1;
  ind.valid_share = 0.0;
  const auto ids = make_chain_dataset(ind);
  const fs::path ind_dir = opts.out / (opts.name + "_ind");
  fs::create_directories(ind_dir);
  write_named(ind_dir / kGraphFile, ids.graph);
  write_named(ind_dir / "test.txt", ids.test);
  out << "wrote " << dir.string() << " (" << ds.graph.size() << " graph, " << ds.valid.size()
      << " valid, " << ds.test.size() << " test) and " << ind_dir.string() << " ("
      << ids.graph.size() << " graph, " << ids.test.size() << " test)\n";
}

}  // namespace sgr::app
