#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sgr/model.hpp"
#include "sgr/sampling.hpp"

namespace sgr {

enum class Protocol { AucOneNegative, HitsAtK, ExchangeHeadTail };

const char* to_string(Protocol p);
Protocol parse_protocol(const std::string& s);

struct ProtocolOptions {
  Protocol protocol = Protocol::AucOneNegative;
  NegativeMode negative_mode = NegativeMode::Mix;
  int num_negatives = 50;  // hits-k only; auc-one-negative always uses one
  int k = 10;
  bool require_subgraph = false;
  bool force_undirected = false;
  ExtractOptions extract;
  std::uint64_t seed = 1;
  int max_retries = 200;
  int workers = 0;
};

// What a scorer reports for one candidate. Must be safe to call concurrently.
struct ScoredCandidate {
  double score = 0.0;
  ExtractStatus status = ExtractStatus::Ok;
  bool directed = true;
};
using CandidateScorer = std::function<ScoredCandidate(const Triplet&)>;

struct ScoreRecord {
  Triplet triplet;
  bool positive = false;
  double score = 0.0;
  std::size_t group = 0;  // index of the test positive this candidate belongs to
  std::size_t rank = 0;   // pessimistic rank within the group (positives only)
  ExtractStatus status = ExtractStatus::Ok;
  bool directed = true;
};

struct EvalReport {
  Protocol protocol = Protocol::AucOneNegative;
  double auc_pr = 0.0;
  double auc_roc = 0.0;
  std::optional<double> hits_at_k;
  int k = 0;
  std::size_t positives = 0;
  std::size_t negatives = 0;
  std::size_t empty_positives = 0;     // scored with the empty-subgraph sentinel
  std::size_t empty_negatives = 0;
  std::size_t fallback_positives = 0;  // undirected fallback used
  std::size_t fallback_negatives = 0;
  std::size_t skipped = 0;             // test triplets without a usable negative
  std::size_t negative_shortfall = 0;  // hits-k groups with fewer negatives than asked
  std::vector<ScoreRecord> records;

  std::string summary() const;
};

// Samples negatives for every test triplet, scores all candidates, and
// computes the protocol's metrics. Negatives of test triplet i come from a
// stream seeded by (seed, i), so the candidate set does not depend on the
// scorer or on threading.
EvalReport run_protocol(const Graph& g, std::span<const Triplet> tests,
                        const CandidateScorer& scorer, const ProtocolOptions& opts);

// Scorer backed by a trained model and subgraph extraction on `g`.
CandidateScorer model_scorer(const Graph& g, const Model& model, const ExtractOptions& opts,
                             bool force_undirected);

// Per-candidate dump: head relation tail label score rank, tab separated.
void write_scores(const std::filesystem::path& file, const Graph& g, const EvalReport& report);

// Metric means over several reports of the same protocol (e.g. one per
// training seed). Counts and records come from the first report.
EvalReport average_reports(std::span<const EvalReport> reports);

}  // namespace sgr
