#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "sgr/graph.hpp"
#include "sgr/subgraph.hpp"

namespace sgr {

struct FilterResult {
  std::vector<Triplet> kept;
  std::size_t dropped = 0;
};

// Keeps triplets whose undirected enclosing subgraph has at least one edge.
// Degenerate triplets (head == tail) are dropped.
FilterResult filter_nonempty(const Graph& g, std::span<const Triplet> triplets,
                             const ExtractOptions& opts);

struct NegativeSet {
  // Negatives grouped by positive: group i is
  // negatives[offsets[i] .. offsets[i + 1]).
  std::vector<Triplet> negatives;
  std::vector<std::size_t> offsets;
  // Positions of positives that received fewer negatives than asked for.
  std::vector<std::size_t> shortfalls;

  std::span<const Triplet> group(std::size_t i) const {
    return {negatives.data() + offsets[i], offsets[i + 1] - offsets[i]};
  }
};

// Draws `per_positive` distinct negatives for each positive by replacing the
// head or tail (even odds). Every negative is absent from the graph and from
// `positives`, and has a nonempty undirected enclosing subgraph. Each
// positive's draws use their own stream seeded by (seed, position), and give
// up after `max_retries` rejected candidates.
NegativeSet materialize_negatives(const Graph& g, std::span<const Triplet> positives,
                                  int per_positive, const ExtractOptions& opts,
                                  std::uint64_t seed, int max_retries = 200);

// Negatives as `head relation tail` lines in group order, plus an index file
// with one `position first_line count head relation tail` line per positive
// (lines are 1-based; count 0 means the positive has no negatives).
void write_negatives(const std::filesystem::path& tsv, const std::filesystem::path& index,
                     const Graph& g, std::span<const Triplet> positives, const NegativeSet& set);

struct DatasetStats {
  std::int32_t entities = 0;
  std::int32_t relations = 0;
  std::size_t graph_triplets = 0;
  std::size_t queries = 0;
  std::size_t directed = 0;
  std::size_t fallback = 0;
  std::size_t empty = 0;
  double mean_nodes = 0.0;
  double mean_edges = 0.0;
  std::size_t max_nodes = 0;

  std::string to_string() const;
};

DatasetStats dataset_stats(const Graph& g, std::span<const Triplet> queries,
                           const ExtractOptions& opts);

}  // namespace sgr
