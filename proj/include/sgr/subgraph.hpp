#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "sgr/graph.hpp"

namespace sgr {

// Distance pair of a subgraph node: hops from the target head, hops to the
// target tail. Both lie in [0, hop + 1].
struct NodeLabel {
  int from_head = 0;
  int to_tail = 0;

  friend bool operator==(const NodeLabel&, const NodeLabel&) = default;
};

// Edge in subgraph-local node indices.
struct LocalEdge {
  int head = 0;
  RelationId relation = 0;
  int tail = 0;

  friend auto operator<=>(const LocalEdge&, const LocalEdge&) = default;
};

// Enclosing subgraph of one candidate triplet.
//
// Nodes are ordered by `from_head` ascending with ties broken by global
// entity id; that order is the sequence order of the final recurrent update.
// Edges are sorted by (head, relation, tail). The target triplet is never in
// `edges`.
struct Subgraph {
  std::vector<EntityId> nodes;
  std::vector<NodeLabel> labels;
  std::vector<LocalEdge> edges;
  LocalEdge target;
  bool directed = true;
  int hop = 0;

  std::size_t num_nodes() const noexcept { return nodes.size(); }
  std::size_t num_edges() const noexcept { return edges.size(); }
  bool empty() const noexcept { return edges.empty(); }

  friend bool operator==(const Subgraph&, const Subgraph&) = default;
};

enum class ExtractStatus : std::uint8_t { Ok = 0, NoDirectedSubgraph = 1, EmptySubgraph = 2 };

const char* to_string(ExtractStatus s);

struct Extraction {
  ExtractStatus status = ExtractStatus::EmptySubgraph;
  Subgraph subgraph;

  bool ok() const noexcept { return status == ExtractStatus::Ok; }

  friend bool operator==(const Extraction&, const Extraction&) = default;
};

struct ExtractOptions {
  int hop = 3;
  // Node cap; nodes with the smallest from_head + to_tail survive.
  int max_nodes = 500;
};

// Candidate node set before labeling and pruning: the intersection of the
// head's and tail's h-hop neighborhoods (outgoing/incoming when `directed`)
// plus both endpoints, sorted by entity id. The target edge is hidden.
std::vector<EntityId> enclosing_nodes(const Graph& g, const Triplet& target, int hop,
                                      bool directed);

// Directed enclosing subgraph: h-hop outgoing neighbors of the head
// intersected with h-hop incoming neighbors of the tail. The target triplet,
// when present in the graph, is invisible to every step.
Extraction extract_directed(const Graph& g, const Triplet& target, const ExtractOptions& opts);

// Undirected enclosing subgraph; edge directions are kept in the result.
Extraction extract_undirected(const Graph& g, const Triplet& target, const ExtractOptions& opts);

// Directed extraction with undirected fallback, or undirected only when
// `force_undirected` is set.
Extraction extract_enclosing(const Graph& g, const Triplet& target, const ExtractOptions& opts,
                             bool force_undirected = false);

// Labels the raw node set (must contain head and tail) with within-subgraph
// distances, iteratively removes nodes farther than `hop` from either end,
// applies the node cap and orders the result.
Extraction label_and_prune(const Graph& g, std::vector<EntityId> nodes, const Triplet& target,
                           const ExtractOptions& opts, bool directed);

// 0/1 incidence with exactly one nonzero per column; stored as the row index
// of each column.
struct IncidenceMatrix {
  int rows = 0;
  std::vector<int> row_of_column;

  int cols() const noexcept { return static_cast<int>(row_of_column.size()); }
  std::vector<double> to_dense() const;  // row-major rows x cols
};

struct Incidence {
  IncidenceMatrix head_to_edge;
  IncidenceMatrix rel_to_edge;
  IncidenceMatrix tail_to_edge;
};

Incidence build_incidence(const Subgraph& sub, int num_relations);

// Extracts many candidates. The OpenMP path and the serial path return
// identical results in identical order.
std::vector<Extraction> extract_batch(const Graph& g, std::span<const Triplet> targets,
                                      const ExtractOptions& opts, bool force_undirected = false);
std::vector<Extraction> extract_batch_serial(const Graph& g, std::span<const Triplet> targets,
                                             const ExtractOptions& opts,
                                             bool force_undirected = false);

std::string summarize(const Graph& g, const Extraction& ex);

}  // namespace sgr
