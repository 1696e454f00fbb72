// Acceptance run: one PASS / FAIL / NOT RUN line per criterion.
//
//   sgr_acceptance [--only N]...
//
// Criterion 5 needs the WN18RR-v1 inductive split; point SGR_WN18RR_V1 at a
// directory holding WN18RR_v1/ and WN18RR_v1_ind/ (train/valid/test.txt each)
// to run it. Exit status is nonzero when any gated criterion fails.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "commands.hpp"
#include "grad_check.hpp"
#include "model_check.hpp"
#include "oracles.hpp"
#include "sgr/graph.hpp"
#include "sgr/metrics.hpp"
#include "sgr/subgraph.hpp"
#include "test_util.hpp"

namespace fs = std::filesystem;
using namespace sgr;
using testing_util::read_file;
using testing_util::TempDir;

namespace {

const fs::path kSource = SGR_SOURCE_DIR;
const std::string kBinary = SGR_BINARY;

enum class Status { Pass, Fail, NotRun };

struct Outcome {
  Status status = Status::Fail;
  std::string detail;
};

Outcome verdict(bool ok, std::string detail) {
  return {ok ? Status::Pass : Status::Fail, std::move(detail)};
}

std::string fixed(double x, int digits = 4) {
  std::ostringstream s;
  s.precision(digits);
  s << std::fixed << x;
  return s.str();
}

std::string sci(double x) {
  std::ostringstream s;
  s.precision(2);
  s << std::scientific << x;
  return s.str();
}

int run_tool(const std::string& args, const fs::path& log) {
  const std::string cmd = "'" + kBinary + "' " + args + " >'" + log.string() + "' 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string q(const fs::path& p) { return "'" + p.string() + "'"; }

// --- 1: gradients ----------------------------------------------------------

double worst_primitive_error() {
  using namespace grad_check;
  std::vector<std::pair<ParameterSet, Forward>> cases;
  auto add = [&](ParameterSet ps, Forward f) { cases.emplace_back(std::move(ps), std::move(f)); };
  const std::vector<int> index{2, 0, 2, 3, 2};
  add(shapes({{3, 4}, {4, 2}}), [](ad::Tape&, const auto& x) { return ad::matmul(x[0], x[1]); });
  add(shapes({{3, 4}, {3, 4}}), [](ad::Tape&, const auto& x) { return ad::add(x[0], x[1]); });
  add(shapes({{3, 4}, {3, 4}}), [](ad::Tape&, const auto& x) { return ad::sub(x[0], x[1]); });
  add(shapes({{3, 4}, {3, 4}}), [](ad::Tape&, const auto& x) { return ad::hadamard(x[0], x[1]); });
  add(shapes({{2, 5}}), [](ad::Tape&, const auto& x) { return ad::scale(x[0], -2.5); });
  add(shapes({{2, 5}}), [](ad::Tape&, const auto& x) { return ad::add_scalar(x[0], 3.0); });
  add(shapes({{4, 3}, {1, 3}}), [](ad::Tape&, const auto& x) { return ad::add_bias(x[0], x[1]); });
  add(shapes({{3, 2}, {3, 4}}),
      [](ad::Tape&, const auto& x) { return ad::concat_cols(std::span<const Tensor>(x)); });
  add(shapes({{2, 3}, {4, 3}}),
      [](ad::Tape&, const auto& x) { return ad::concat_rows(std::span<const Tensor>(x)); });
  add(shapes({{4, 3}, {4, 1}}), [](ad::Tape&, const auto& x) { return ad::scale_rows(x[0], x[1]); });
  auto off_kink = shapes({{3, 5}});
  for (double& v : off_kink[0].value.data) v += v >= 0 ? 0.1 : -0.1;
  add(off_kink, [](ad::Tape&, const auto& x) { return ad::relu(x[0]); });
  add(shapes({{3, 5}}), [](ad::Tape&, const auto& x) { return ad::tanh(x[0]); });
  add(shapes({{3, 5}}), [](ad::Tape&, const auto& x) { return ad::sigmoid(x[0]); });
  add(shapes({{6, 4}}), [](ad::Tape&, const auto& x) {
    std::mt19937_64 rng(17);
    return ad::dropout(x[0], 0.5, true, rng);
  });
  add(shapes({{4, 3}}), [index](ad::Tape&, const auto& x) { return ad::row_select(x[0], index); });
  add(shapes({{5, 3}}),
      [index](ad::Tape&, const auto& x) { return ad::scatter_add_rows(x[0], index, 4); });
  add(shapes({{5, 3}}), [](ad::Tape&, const auto& x) { return ad::slice_cols(x[0], 1, 2); });
  add(shapes({{5, 3}}), [](ad::Tape&, const auto& x) { return ad::sum(x[0]); });
  add(shapes({{1, 3}, {1, 3}, {3, 9}, {3, 9}, {1, 9}, {1, 9}}), [](ad::Tape&, const auto& x) {
    return ad::gru_cell(x[0], x[1], {x[2], x[3], x[4], x[5]});
  });
  add(shapes({{5, 3}, {3, 9}, {3, 9}, {1, 9}, {1, 9}}), [](ad::Tape&, const auto& x) {
    return ad::gru_sequence(x[0], {x[1], x[2], x[3], x[4]});
  });
  double worst = 0.0;
  for (auto& [ps, f] : cases) worst = std::max(worst, gradient_error(ps, f));
  return worst;
}

Outcome gradients() {
  const double primitive = worst_primitive_error();
  const ModelConfig cfg;  // defaults: h=3, l=3, d=32
  const Subgraph pos = model_check::find_subgraph(5, cfg.hop, 11);
  const Subgraph neg = model_check::find_subgraph(5, cfg.hop, 12);
  Model model(cfg, 4, 3);
  const auto errors = model_check::gradient_errors(model, pos, neg, 10.0, 5);
  const auto worst = std::max_element(errors.begin(), errors.end(), [](const auto& a, const auto& b) {
    return a.error < b.error;
  });
  return verdict(primitive <= 1e-4 && worst->error <= 1e-3,
                 "primitive max " + sci(primitive) + ", end-to-end max " + sci(worst->error) +
                     " (" + worst->name + ") over " + std::to_string(errors.size()) + " tensors");
}

// --- 2: extraction ------------------------------------------------------------

Outcome extraction() {
  std::mt19937_64 rng(2024);
  std::size_t compared = 0, mismatches = 0, not_contained = 0, directed_ok = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 3 + static_cast<int>(rng() % 98);
    const Graph g = oracle::random_graph(n, n + static_cast<int>(rng() % (2 * n)), 4, rng);
    for (int k = 0; k < 3; ++k) {
      Triplet t = g.triplet(static_cast<EdgeId>(rng() % g.num_triplets()));
      if (k == 2) t = {static_cast<EntityId>(rng() % n), 1, static_cast<EntityId>(rng() % n)};
      if (t.head == t.tail) continue;
      const int hop = 1 + static_cast<int>(rng() % 3);
      const ExtractOptions opts{.hop = hop, .max_nodes = 500};
      const auto dir = extract_directed(g, t, opts);
      const auto und = extract_undirected(g, t, opts);
      compared += 2;
      if (dir != oracle::extract(g, t, hop, true)) ++mismatches;
      if (und != oracle::extract(g, t, hop, false)) ++mismatches;
      if (dir.ok()) {
        ++directed_ok;
        std::set<EntityId> us(und.subgraph.nodes.begin(), und.subgraph.nodes.end());
        for (const auto v : dir.subgraph.nodes) {
          if (!us.contains(v)) {
            ++not_contained;
            break;
          }
        }
      }
    }
  }
  return verdict(mismatches == 0 && not_contained == 0 && directed_ok > 0,
                 std::to_string(compared) + " extractions, " + std::to_string(mismatches) +
                     " oracle mismatches, " + std::to_string(not_contained) +
                     " directed sets outside the undirected set");
}

// --- 3: metrics ---------------------------------------------------------------

Outcome metrics() {
  std::mt19937_64 rng(3);
  std::size_t bad_pr = 0, bad_roc = 0, bad_hits = 0;
  for (int set = 0; set < 1000; ++set) {
    const std::size_t n = 2 + rng() % 80;
    const int grid = 1 + static_cast<int>(rng() % 16);
    std::vector<LabeledScore> v(n);
    for (auto& s : v) {
      s.score = static_cast<double>(rng() % static_cast<std::uint64_t>(grid)) / 8.0;
      s.positive = (rng() & 1) != 0;
    }
    v[0].positive = true;
    v[1].positive = false;
    if (auc_pr(v) != oracle::auc_pr(v)) ++bad_pr;
    if (auc_roc(v) != oracle::auc_roc(v)) ++bad_roc;
    std::vector<double> negatives;
    for (const auto& s : v) {
      if (!s.positive) negatives.push_back(s.score);
    }
    const std::size_t k = 1 + rng() % 12;
    if (hits_at_k(v[0].score, negatives, k) != (oracle::rank(v[0].score, negatives) <= k)) ++bad_hits;
  }
  return verdict(bad_pr + bad_roc + bad_hits == 0,
                 "1000 sets, mismatches: auc_pr " + std::to_string(bad_pr) + ", auc_roc " +
                     std::to_string(bad_roc) + ", hits@k " + std::to_string(bad_hits));
}

// --- 4: asymmetry on chains ------------------------------------------------

struct ExchangeAuc {
  double roc = 0.0, pr = 0.0;
};

ExchangeAuc chain_exchange_auc(const fs::path& data, std::uint64_t seed, bool undirected) {
  const fs::path ckpt = data / ("c" + std::to_string(seed) + (undirected ? "u" : "d") + ".ckpt");
  Config cfg;
  cfg.set("train_dir", (data / "chains").string());
  cfg.set("checkpoint", ckpt.string());
  cfg.set("hop", "3");
  cfg.set("iters", "3");
  cfg.set("dim", "32");
  cfg.set("lr", "0.01");
  cfg.set("epochs", "30");
  cfg.set("seed", std::to_string(seed));
  if (undirected) cfg.set("undirected", "true");
  std::ostringstream sink;
  app::train(app::train_settings(cfg), sink);

  app::EvalOptions ev;
  ev.checkpoints = {ckpt};
  ev.test_dir = data / "chains_ind";
  ev.protocol.protocol = Protocol::ExchangeHeadTail;
  ev.protocol.force_undirected = undirected;
  ev.protocol.extract.hop = 3;
  const EvalReport r = app::eval(ev, sink);
  return {r.auc_roc, r.auc_pr};
}

Outcome asymmetry() {
  TempDir dir;
  std::ostringstream sink;
  app::synth({.out = dir.path(), .name = "chains", .chains = 40, .length = 8, .stray = 0, .seed = 1},
             sink);
  std::vector<double> directed, undirected, drops;
  std::string per_seed;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const auto d = chain_exchange_auc(dir.path(), seed, false);
    const auto u = chain_exchange_auc(dir.path(), seed, true);
    directed.push_back(d.roc);
    undirected.push_back(u.roc);
    drops.push_back(d.roc - u.roc);
    per_seed += " seed" + std::to_string(seed) + "=" + fixed(d.roc) + "/" + fixed(u.roc);
  }
  auto median = [](std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return v[v.size() / 2];
  };
  const double md = median(directed), mu = median(undirected), mdrop = median(drops);
  return verdict(md >= 0.9 && mdrop >= 0.1,
                 "median exchange AUC directed " + fixed(md) + ", undirected " + fixed(mu) +
                     ", drop " + fixed(mdrop) + " (directed/undirected:" + per_seed + ")");
}

// --- 5: WN18RR-v1 ----------------------------------------------------------

Outcome small_split() {
  const char* root = std::getenv("SGR_WN18RR_V1");
  if (root == nullptr) return {Status::NotRun, "set SGR_WN18RR_V1 to the dataset directory"};
  const fs::path base = root;
  TempDir dir;
  Config cfg;
  cfg.set("train_dir", (base / "WN18RR_v1").string());
  cfg.set("checkpoint", (dir / "wn.ckpt").string());
  cfg.set("runs", "4");
  std::ostringstream sink;
  const auto ckpts = app::train(app::train_settings(cfg), sink);
  app::EvalOptions ev;
  ev.checkpoints = ckpts;
  ev.test_dir = base / "WN18RR_v1_ind";
  const EvalReport auc = app::eval(ev, sink);
  ev.protocol.protocol = Protocol::HitsAtK;
  const EvalReport hits = app::eval(ev, sink);
  const double hits10 = hits.hits_at_k.value_or(0.0);
  return verdict(auc.auc_pr >= 0.90 && hits10 >= 0.75,
                 "AUC-PR " + fixed(auc.auc_pr) + ", Hits@10 " + fixed(hits10));
}

// --- 6: determinism -----------------------------------------------------------

Outcome determinism() {
  TempDir dir;
  std::string ckpt[2], log[2];
  for (int run = 0; run < 2; ++run) {
    const int code = run_tool("train " + q(kSource / "data/toy.cfg") + " --checkpoint " +
                                  q(dir / "m.ckpt") + " --log " + q(dir / "m.log"),
                              dir / "stdout.txt");
    if (code != 0) return verdict(false, "train exited with " + std::to_string(code));
    ckpt[run] = read_file(dir / "m.ckpt");
    log[run] = read_file(dir / "m.log");
    fs::remove(dir / "m.ckpt");
    fs::remove(dir / "m.log");
  }
  const bool same = !ckpt[0].empty() && ckpt[0] == ckpt[1] && log[0] == log[1];
  return verdict(same, "checkpoint " + std::to_string(ckpt[0].size()) + " bytes, log " +
                           std::to_string(log[0].size()) + " bytes, " +
                           (same ? "identical" : "different"));
}

// --- 7: relabeling ----------------------------------------------------------

Outcome relabeling() {
  std::mt19937_64 rng(77);
  std::size_t compared = 0, differing = 0;
  const Model model(ModelConfig{}, 3, 9);
  for (int trial = 0; trial < 5; ++trial) {
    const int n = 30;
    const Graph g = oracle::random_graph(n, 90, 3, rng);
    // Spread the ids out with unrelated entities in between, keeping order.
    const int stride = 2 + trial;
    Vocabularies v;
    for (int i = 0; i < n * stride; ++i) v.entities.intern("u" + std::to_string(i));
    for (int r = 0; r < 3; ++r) v.relations.intern("r" + std::to_string(r));
    auto move = [&](EntityId e) { return e * stride + stride - 1; };
    std::vector<Triplet> moved;
    for (const auto& t : g.triplets()) moved.push_back({move(t.head), t.relation, move(t.tail)});
    const Graph g2(moved, v);
    for (const auto& t : g.triplets()) {
      if (t.head == t.tail) continue;
      const auto a = extract_enclosing(g, t, {});
      const auto b = extract_enclosing(g2, {move(t.head), t.relation, move(t.tail)}, {});
      const double sa = model.score(a), sb = model.score(b);
      ++compared;
      if (a.ok() != b.ok() || std::memcmp(&sa, &sb, sizeof sa) != 0) ++differing;
    }
  }
  return verdict(differing == 0 && compared > 0,
                 std::to_string(compared) + " triplets, " + std::to_string(differing) +
                     " scores differ");
}

// --- 8: preprocess ------------------------------------------------------------

Outcome postprocess() {
  TempDir dir;
  const std::string args = " --hop 3 --neg 5 --seed 1";
  if (run_tool("preprocess " + q(kSource / "data/toy") + " -o " + q(dir / "a") + args,
               dir / "a.txt") != 0 ||
      run_tool("preprocess " + q(dir / "a") + " -o " + q(dir / "b") + args, dir / "b.txt") != 0) {
    return verdict(false, "preprocess failed");
  }
  std::size_t positives = 0, negatives = 0, empty_pos = 0, empty_neg = 0;
  for (const std::string split : {"valid", "test"}) {
    for (const bool neg : {false, true}) {
      const fs::path file = dir / "a" / (split + (neg ? "_neg.txt" : ".txt"));
      const fs::path sources[] = {file};
      const Graph g = load_graph(dir / "a/train.txt", VocabMode::Build, nullptr, sources);
      for (const auto& t : read_triplets(file, g)) {
        const bool empty = !extract_undirected(g, t, {.hop = 3, .max_nodes = 500}).ok();
        (neg ? negatives : positives) += 1;
        (neg ? empty_neg : empty_pos) += empty ? 1 : 0;
      }
    }
  }
  std::size_t differing = 0;
  for (const char* f : {"train.txt", "valid.txt", "test.txt", "valid_neg.txt", "valid_neg.idx",
                        "test_neg.txt", "test_neg.idx"}) {
    if (read_file(dir / "a" / f) != read_file(dir / "b" / f)) ++differing;
  }
  return verdict(empty_pos == 0 && empty_neg == 0 && differing == 0 && positives > 0 && negatives > 0,
                 std::to_string(positives) + " positives (" + std::to_string(empty_pos) +
                     " empty), " + std::to_string(negatives) + " negatives (" +
                     std::to_string(empty_neg) + " empty), " + std::to_string(differing) +
                     " files changed on rerun");
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> only;
  for (int i = 1; i + 1 < argc; i += 2) {
    if (std::string(argv[i]) == "--only") only.insert(std::atoi(argv[i + 1]));
  }
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"gradient check", gradients},      {"extraction oracles", extraction},
      {"metric oracles", metrics},        {"exchange asymmetry", asymmetry},
      {"WN18RR-v1 reproduction", small_split}, {"determinism", determinism},
      {"relabeling invariance", relabeling},   {"preprocess contract", postprocess},
  };
  bool gated_failure = false;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int number = static_cast<int>(i) + 1;
    if (!only.empty() && !only.contains(number)) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {Status::Fail, std::string("error: ") + e.what()};
    }
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    // The oracle criteria carry a one-minute budget.
    if (number <= 3 && seconds > 60.0 && o.status == Status::Pass) {
      o = {Status::Fail, o.detail + "; over the 60s budget"};
    }
    const char* label = o.status == Status::Pass ? "PASS" : o.status == Status::Fail ? "FAIL" : "NOT RUN";
    std::cout << "criterion " << number << " " << label << ": " << criteria[i].first << ": "
              << o.detail << " [" << fixed(seconds, 1) << "s]" << std::endl;
    // The small-split reproduction is soft: it never fails the run.
    if (o.status == Status::Fail && number != 5) gated_failure = true;
  }
  return gated_failure ? 1 : 0;
}
