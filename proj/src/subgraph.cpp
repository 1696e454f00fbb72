#include "sgr/subgraph.hpp"

#include <algorithm>
#include <exception>
#include <limits>
#include <numeric>
#include <sstream>

#include "sgr/errors.hpp"

namespace sgr {
namespace {

constexpr int kUnreached = std::numeric_limits<int>::max();

std::vector<EntityId> sorted_intersection(const std::vector<EntityId>& a,
                                          const std::vector<EntityId>& b) {
  std::vector<EntityId> out;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

void insert_sorted(std::vector<EntityId>& v, EntityId x) {
  auto it = std::lower_bound(v.begin(), v.end(), x);
  if (it == v.end() || *it != x) v.insert(it, x);
}

// Breadth-first distances from `source` over a local adjacency list.
std::vector<int> bfs(const std::vector<std::vector<int>>& adj, int source) {
  std::vector<int> dist(adj.size(), kUnreached);
  std::vector<int> queue{source};
  dist[static_cast<std::size_t>(source)] = 0;
  for (std::size_t q = 0; q < queue.size(); ++q) {
    const int u = queue[q];
    for (const int v : adj[static_cast<std::size_t>(u)]) {
      if (dist[static_cast<std::size_t>(v)] != kUnreached) continue;
      dist[static_cast<std::size_t>(v)] = dist[static_cast<std::size_t>(u)] + 1;
      queue.push_back(v);
    }
  }
  return dist;
}

struct LocalView {
  std::vector<EdgeId> edge_ids;
  std::vector<LocalEdge> edges;
  std::vector<int> from_head;
  std::vector<int> to_tail;
};

LocalView label(const Graph& g, const std::vector<EntityId>& nodes, const Triplet& target,
                bool directed) {
  LocalView view;
  view.edge_ids = induced_edges(g, nodes, target);
  auto local = [&](EntityId e) {
    return static_cast<int>(std::lower_bound(nodes.begin(), nodes.end(), e) - nodes.begin());
  };
  std::vector<std::vector<int>> forward(nodes.size()), backward(nodes.size());
  view.edges.reserve(view.edge_ids.size());
  for (const EdgeId id : view.edge_ids) {
    const auto& t = g.triplet(id);
    const LocalEdge le{local(t.head), t.relation, local(t.tail)};
    view.edges.push_back(le);
    forward[static_cast<std::size_t>(le.head)].push_back(le.tail);
    backward[static_cast<std::size_t>(le.tail)].push_back(le.head);
    if (!directed) {
      forward[static_cast<std::size_t>(le.tail)].push_back(le.head);
      backward[static_cast<std::size_t>(le.head)].push_back(le.tail);
    }
  }
  view.from_head = bfs(forward, local(target.head));
  view.to_tail = bfs(backward, local(target.tail));
  return view;
}

}  // namespace

const char* to_string(ExtractStatus s) {
  switch (s) {
    case ExtractStatus::Ok: return "ok";
    case ExtractStatus::NoDirectedSubgraph: return "no-directed-subgraph";
    case ExtractStatus::EmptySubgraph: return "empty-subgraph";
  }
  return "unknown";
}

Extraction label_and_prune(const Graph& g, std::vector<EntityId> nodes, const Triplet& target,
                           const ExtractOptions& opts, bool directed) {
  const int hop = opts.hop;
  std::sort(nodes.begin(), nodes.end());
  nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
  insert_sorted(nodes, target.head);
  insert_sorted(nodes, target.tail);
  const auto max_nodes = static_cast<std::size_t>(std::max(opts.max_nodes, 2));
  auto is_endpoint = [&](EntityId e) { return e == target.head || e == target.tail; };

  LocalView view;
  bool capped = false;
  for (;;) {
    view = label(g, nodes, target, directed);
    std::vector<EntityId> kept;
    kept.reserve(nodes.size());
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      if (is_endpoint(nodes[i]) || (view.from_head[i] <= hop && view.to_tail[i] <= hop)) {
        kept.push_back(nodes[i]);
      }
    }
    if (kept.size() != nodes.size()) {
      nodes = std::move(kept);
      continue;
    }
    if (nodes.size() <= max_nodes || capped) break;

    std::vector<std::size_t> order;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      if (!is_endpoint(nodes[i])) order.push_back(i);
    }
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      const int da = view.from_head[a] + view.to_tail[a];
      const int db = view.from_head[b] + view.to_tail[b];
      return da != db ? da < db : nodes[a] < nodes[b];
    });
    order.resize(max_nodes - 2);
    std::vector<EntityId> survivors{target.head, target.tail};
    for (const auto i : order) survivors.push_back(nodes[i]);
    std::sort(survivors.begin(), survivors.end());
    nodes = std::move(survivors);
    capped = true;
  }

  Extraction ex;
  const auto failure = directed ? ExtractStatus::NoDirectedSubgraph : ExtractStatus::EmptySubgraph;
  const auto tail_local = static_cast<std::size_t>(
      std::lower_bound(nodes.begin(), nodes.end(), target.tail) - nodes.begin());
  if (view.edges.empty() || (directed && view.from_head[tail_local] == kUnreached)) {
    ex.status = failure;
    return ex;
  }

  auto clamp = [&](int d) { return std::min(d, hop + 1); };
  std::vector<std::size_t> order(nodes.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const int da = clamp(view.from_head[a]);
    const int db = clamp(view.from_head[b]);
    return da != db ? da < db : nodes[a] < nodes[b];
  });
  std::vector<int> position(nodes.size());
  for (std::size_t i = 0; i < order.size(); ++i) position[order[i]] = static_cast<int>(i);

  Subgraph& sub = ex.subgraph;
  sub.hop = hop;
  sub.directed = directed;
  for (const auto i : order) {
    sub.nodes.push_back(nodes[i]);
    sub.labels.push_back({clamp(view.from_head[i]), clamp(view.to_tail[i])});
  }
  for (const auto& e : view.edges) {
    sub.edges.push_back({position[static_cast<std::size_t>(e.head)], e.relation,
                         position[static_cast<std::size_t>(e.tail)]});
  }
  std::sort(sub.edges.begin(), sub.edges.end());
  const auto head_local = static_cast<std::size_t>(
      std::lower_bound(nodes.begin(), nodes.end(), target.head) - nodes.begin());
  sub.target = {position[head_local], target.relation, position[tail_local]};
  ex.status = ExtractStatus::Ok;
  return ex;
}

std::vector<EntityId> enclosing_nodes(const Graph& g, const Triplet& target, int hop,
                                      bool directed) {
  if (hop < 1) throw ConfigError("hop must be >= 1");
  const auto excluded = g.find(target);
  std::vector<EntityId> nodes;
  if (directed) {
    nodes = sorted_intersection(k_hop_outgoing(g, target.head, hop, excluded),
                                k_hop_incoming(g, target.tail, hop, excluded));
  } else {
    nodes = sorted_intersection(k_hop_undirected(g, target.head, hop, excluded),
                                k_hop_undirected(g, target.tail, hop, excluded));
  }
  insert_sorted(nodes, target.head);
  insert_sorted(nodes, target.tail);
  return nodes;
}

Extraction extract_directed(const Graph& g, const Triplet& target, const ExtractOptions& opts) {
  if (target.head == target.tail) {
    throw DegenerateCandidate("candidate head equals tail: " + g.describe(target));
  }
  if (opts.hop < 1) throw ConfigError("hop must be >= 1");
  const auto excluded = g.find(target);
  const auto outgoing = k_hop_outgoing(g, target.head, opts.hop, excluded);
  const auto incoming_one = k_hop_incoming(g, target.tail, 1, excluded);
  if (sorted_intersection(outgoing, incoming_one).empty()) {
    return {ExtractStatus::NoDirectedSubgraph, {}};
  }
  return label_and_prune(g, enclosing_nodes(g, target, opts.hop, true), target, opts, true);
}

Extraction extract_undirected(const Graph& g, const Triplet& target, const ExtractOptions& opts) {
  if (target.head == target.tail) {
    throw DegenerateCandidate("candidate head equals tail: " + g.describe(target));
  }
  return label_and_prune(g, enclosing_nodes(g, target, opts.hop, false), target, opts, false);
}

Extraction extract_enclosing(const Graph& g, const Triplet& target, const ExtractOptions& opts,
                             bool force_undirected) {
  if (!force_undirected) {
    auto directed = extract_directed(g, target, opts);
    if (directed.ok()) return directed;
  }
  return extract_undirected(g, target, opts);
}

std::vector<double> IncidenceMatrix::to_dense() const {
  std::vector<double> dense(static_cast<std::size_t>(rows) * row_of_column.size(), 0.0);
  for (std::size_t j = 0; j < row_of_column.size(); ++j) {
    dense[static_cast<std::size_t>(row_of_column[j]) * row_of_column.size() + j] = 1.0;
  }
  return dense;
}

Incidence build_incidence(const Subgraph& sub, int num_relations) {
  if (sub.edges.empty()) throw EmptySubgraphError("cannot build incidence of an empty subgraph");
  Incidence inc;
  const int n = static_cast<int>(sub.num_nodes());
  inc.head_to_edge.rows = n;
  inc.rel_to_edge.rows = num_relations;
  inc.tail_to_edge.rows = n;
  for (const auto& e : sub.edges) {
    if (e.head < 0 || e.head >= n || e.tail < 0 || e.tail >= n || e.relation < 0 ||
        e.relation >= num_relations) {
      throw DimensionError("subgraph edge index out of range");
    }
    inc.head_to_edge.row_of_column.push_back(e.head);
    inc.rel_to_edge.row_of_column.push_back(e.relation);
    inc.tail_to_edge.row_of_column.push_back(e.tail);
  }
  return inc;
}

std::vector<Extraction> extract_batch_serial(const Graph& g, std::span<const Triplet> targets,
                                             const ExtractOptions& opts, bool force_undirected) {
  std::vector<Extraction> out;
  out.reserve(targets.size());
  for (const auto& t : targets) out.push_back(extract_enclosing(g, t, opts, force_undirected));
  return out;
}

std::vector<Extraction> extract_batch(const Graph& g, std::span<const Triplet> targets,
                                      const ExtractOptions& opts, bool force_undirected) {
  std::vector<Extraction> out(targets.size());
  std::vector<std::exception_ptr> errors(targets.size());
  const auto n = static_cast<std::ptrdiff_t>(targets.size());
#pragma omp parallel for schedule(dynamic, 4)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    try {
      out[k] = extract_enclosing(g, targets[k], opts, force_undirected);
    } catch (...) {
      errors[k] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

std::string summarize(const Graph& g, const Extraction& ex) {
  std::ostringstream os;
  os << "status=" << to_string(ex.status);
  if (!ex.ok()) return os.str();
  const auto& s = ex.subgraph;
  os << " directed=" << (s.directed ? 1 : 0) << " nodes=" << s.num_nodes()
     << " edges=" << s.num_edges() << " hop=" << s.hop;
  os << " head_label=(" << s.labels[static_cast<std::size_t>(s.target.head)].from_head << ","
     << s.labels[static_cast<std::size_t>(s.target.head)].to_tail << ")";
  os << " tail_label=(" << s.labels[static_cast<std::size_t>(s.target.tail)].from_head << ","
     << s.labels[static_cast<std::size_t>(s.target.tail)].to_tail << ")";
  os << " relations=";
  std::vector<RelationId> rels;
  for (const auto& e : s.edges) rels.push_back(e.relation);
  std::sort(rels.begin(), rels.end());
  rels.erase(std::unique(rels.begin(), rels.end()), rels.end());
  for (std::size_t i = 0; i < rels.size(); ++i) {
    os << (i ? "," : "") << g.relations().name(rels[i]);
  }
  return os.str();
}

}  // namespace sgr
