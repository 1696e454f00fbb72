#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <unordered_set>

#include "sgr/graph.hpp"
#include "sgr/subgraph.hpp"

namespace sgr {

enum class CorruptMode { ReplaceHead, ReplaceTail, ExchangeHeadTail };

// How replace-style negatives pick which side to corrupt.
enum class NegativeMode { Mix, Head, Tail };

const char* to_string(NegativeMode m);
NegativeMode parse_negative_mode(const std::string& s);

struct SamplingOptions {
  bool require_subgraph = false;
  int max_retries = 200;
  ExtractOptions extract;
};

// True iff the candidate has an undirected enclosing subgraph with >= 1 edge.
bool has_enclosing_subgraph(const Graph& g, const Triplet& t, const ExtractOptions& opts);

// Corrupts `pos`. Replace modes draw the new entity uniformly and reject
// candidates that equal the original, are degenerate (head == tail), exist in
// the graph or in `avoid`, or (with require_subgraph) have no enclosing
// subgraph. Exchange mode is deterministic. Returns nullopt once the retry
// budget is exhausted or the exchanged triplet is a known fact.
std::optional<Triplet> sample_negative(const Graph& g, const Triplet& pos, CorruptMode mode,
                                       const SamplingOptions& opts, std::mt19937_64& rng,
                                       const std::unordered_set<Triplet, TripletHash>* avoid = nullptr);

CorruptMode pick_replace_mode(NegativeMode mode, std::mt19937_64& rng);

// Stream seed for item `index` of stage `stage`; lets parallel loops draw
// random numbers independently of scheduling.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stage, std::uint64_t index);

}  // namespace sgr
