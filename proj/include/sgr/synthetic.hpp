#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "sgr/graph.hpp"

namespace sgr {

struct NamedTriplet {
  std::string head, relation, tail;

  friend bool operator==(const NamedTriplet&, const NamedTriplet&) = default;
};

// Directed chains e<c>_0 -> e<c>_1 -> ... under relation `next`, with the
// asymmetric relation `skip` from every node to the node two steps ahead.
// Some chains get a third-step `jump` fact and random `link` edges join
// chains. A fraction of the `skip` facts is held out as queries; the rest
// stay in the graph.
struct ChainOptions {
  int chains = 30;
  int length = 8;
  double held_out = 0.3;   // fraction of skip facts that become queries
  double valid_share = 0.5;  // share of held-out facts that go to `valid`
  int cross_links = 10;
  double jump_rate = 0.3;
  // Queries joining two different chains with no edges between them; they
  // have no enclosing subgraph.
  int stray_queries = 0;
  std::string prefix = "e";
  std::uint64_t seed = 1;
};

struct ChainDataset {
  std::vector<NamedTriplet> graph;
  std::vector<NamedTriplet> valid;
  std::vector<NamedTriplet> test;
};

ChainDataset make_chain_dataset(const ChainOptions& opts);

void write_named(const std::filesystem::path& file, const std::vector<NamedTriplet>& triplets);

// Builds a graph from named triplets. With `reuse`, relation ids follow that
// vocabulary and unknown relations are rejected.
Graph graph_from_named(const std::vector<NamedTriplet>& triplets,
                       const Vocabularies* reuse = nullptr);
// Resolves query names against `g`; unknown names throw VocabularyError.
std::vector<Triplet> resolve_named(const Graph& g, const std::vector<NamedTriplet>& triplets);

}  // namespace sgr
