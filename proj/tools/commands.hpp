#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "sgr/config.hpp"
#include "sgr/evaluator.hpp"
#include "sgr/model.hpp"
#include "sgr/trainer.hpp"

// Subcommand bodies of the `sgr` tool, kept out of main() so tests can drive
// them directly.
namespace sgr::app {

namespace fs = std::filesystem;

// A dataset directory holds `train.txt` (the graph) and optionally
// `valid.txt` / `test.txt` (queries against that graph).
inline constexpr const char* kGraphFile = "train.txt";
inline constexpr const char* kQuerySplits[] = {"valid", "test"};

struct PreprocessOptions {
  fs::path dataset;
  fs::path out;
  int hop = 3;
  int negatives = 1;
  std::uint64_t seed = 1;
  int max_nodes = 500;
};

struct SplitSummary {
  std::string name;
  std::size_t kept = 0;
  std::size_t dropped = 0;
  std::size_t negatives = 0;
  std::size_t shortfalls = 0;
};

// Copies the graph, drops queries without an enclosing subgraph, and writes
// `<split>_neg.txt` plus `<split>_neg.idx` for every query split.
std::vector<SplitSummary> preprocess(const PreprocessOptions& opts, std::ostream& out);

struct TrainSettings {
  ModelConfig model;
  TrainConfig train;
  fs::path train_dir;
  fs::path checkpoint;
  fs::path log;  // empty: no log file
  bool merge_valid_into_graph = false;
  int runs = 1;
  std::string echo;
};

// Keys accepted in a training config file.
std::vector<std::string_view> train_config_keys();
TrainSettings train_settings(const Config& cfg);

// Trains `runs` models with seeds seed, seed+1, ...; returns checkpoint
// paths. With runs > 1 each path gets a `.seed<N>` suffix.
std::vector<fs::path> train(const TrainSettings& settings, std::ostream& out);

struct EvalOptions {
  std::vector<fs::path> checkpoints;
  fs::path test_dir;
  fs::path test_file;  // default: <test_dir>/test.txt
  ProtocolOptions protocol;
  fs::path report;  // empty: print only
  fs::path scores;  // empty: no per-candidate dump
};

// Evaluates each checkpoint and averages the metrics.
EvalReport eval(const EvalOptions& opts, std::ostream& out);

struct ScoreOptions {
  fs::path checkpoint;
  fs::path graph;
  std::string triplet;  // "head relation tail", tab or space separated
  bool force_undirected = false;
  int max_nodes = 500;
};

double score(const ScoreOptions& opts, std::ostream& out);

struct StatsOptions {
  fs::path dataset;
  int hop = 3;
  int max_nodes = 500;
};

void stats(const StatsOptions& opts, std::ostream& out);

struct SynthOptions {
  fs::path out;        // writes <out>/<name> and <out>/<name>_ind
  std::string name = "chains";
  int chains = 30;
  int length = 8;
  int stray = 0;
  std::uint64_t seed = 1;
};

void synth(const SynthOptions& opts, std::ostream& out);

}  // namespace sgr::app
