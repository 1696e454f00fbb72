#include "sgr/datatools.hpp"

#include <algorithm>
#include <fstream>
#include <random>
#include <sstream>
#include <unordered_set>

#include "sgr/errors.hpp"
#include "sgr/sampling.hpp"
#include "sgr/text.hpp"

namespace sgr {

FilterResult filter_nonempty(const Graph& g, std::span<const Triplet> triplets,
                             const ExtractOptions& opts) {
  std::vector<Triplet> candidates;
  FilterResult r;
  for (const auto& t : triplets) {
    if (t.head == t.tail) {
      ++r.dropped;
    } else {
      candidates.push_back(t);
    }
  }
  const auto ex = extract_batch(g, candidates, opts, /*force_undirected=*/true);
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (ex[i].ok()) {
      r.kept.push_back(candidates[i]);
    } else {
      ++r.dropped;
    }
  }
  return r;
}

NegativeSet materialize_negatives(const Graph& g, std::span<const Triplet> positives,
                                  int per_positive, const ExtractOptions& opts,
                                  std::uint64_t seed, int max_retries) {
  if (per_positive < 1) throw ConfigError("negatives per positive must be >= 1");
  const std::unordered_set<Triplet, TripletHash> avoid(positives.begin(), positives.end());
  std::vector<std::vector<Triplet>> groups(positives.size());
  std::vector<std::exception_ptr> errors(positives.size());
  const auto n = static_cast<std::ptrdiff_t>(positives.size());
#pragma omp parallel for schedule(dynamic, 4)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    try {
      const Triplet& pos = positives[k];
      if (pos.head == pos.tail) continue;
      std::mt19937_64 rng(derive_seed(seed, 0, k));
      std::uniform_int_distribution<EntityId> pick(0, g.num_entities() - 1);
      std::bernoulli_distribution head_side(0.5);
      auto& out = groups[k];
      int rejected = 0;
      while (static_cast<int>(out.size()) < per_positive && rejected < max_retries) {
        Triplet cand = pos;
        if (head_side(rng)) {
          cand.head = pick(rng);
        } else {
          cand.tail = pick(rng);
        }
        const bool ok = cand.head != cand.tail && !g.contains(cand) && !avoid.contains(cand) &&
                        std::find(out.begin(), out.end(), cand) == out.end() &&
                        extract_undirected(g, cand, opts).ok();
        if (ok) {
          out.push_back(cand);
        } else {
          ++rejected;
        }
      }
    } catch (...) {
      errors[k] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  NegativeSet set;
  set.offsets.push_back(0);
  for (std::size_t i = 0; i < groups.size(); ++i) {
    if (static_cast<int>(groups[i].size()) < per_positive) set.shortfalls.push_back(i);
    set.negatives.insert(set.negatives.end(), groups[i].begin(), groups[i].end());
    set.offsets.push_back(set.negatives.size());
  }
  return set;
}

void write_negatives(const std::filesystem::path& tsv, const std::filesystem::path& index,
                     const Graph& g, std::span<const Triplet> positives, const NegativeSet& set) {
  if (set.offsets.size() != positives.size() + 1) {
    throw DimensionError("negative set does not match the positives");
  }
  write_triplets(tsv, g, set.negatives);
  std::ofstream out(index);
  if (!out) throw IoError("cannot write " + index.string());
  for (std::size_t i = 0; i < positives.size(); ++i) {
    const auto count = set.offsets[i + 1] - set.offsets[i];
    out << i << '\t' << (count > 0 ? set.offsets[i] + 1 : 0) << '\t' << count << '\t'
        << g.entities().name(positives[i].head) << '\t'
        << g.relations().name(positives[i].relation) << '\t'
        << g.entities().name(positives[i].tail) << '\n';
  }
  if (!out) throw IoError("write failed: " + index.string());
}

std::string DatasetStats::to_string() const {
  std::ostringstream s;
  s << "entities=" << entities << '\n'
    << "relations=" << relations << '\n'
    << "graph_triplets=" << graph_triplets << '\n'
    << "queries=" << queries << '\n'
    << "directed_subgraphs=" << directed << '\n'
    << "undirected_fallbacks=" << fallback << '\n'
    << "empty_subgraphs=" << empty << '\n'
    << "mean_nodes=" << fixed(mean_nodes, 3) << '\n'
    << "mean_edges=" << fixed(mean_edges, 3) << '\n'
    << "max_nodes=" << max_nodes << '\n';
  return s.str();
}

DatasetStats dataset_stats(const Graph& g, std::span<const Triplet> queries,
                           const ExtractOptions& opts) {
  DatasetStats st;
  st.entities = g.num_entities();
  st.relations = g.num_relations();
  st.graph_triplets = g.num_triplets();
  st.queries = queries.size();
  std::vector<Triplet> usable;
  for (const auto& q : queries) {
    if (q.head == q.tail) {
      ++st.empty;
    } else {
      usable.push_back(q);
    }
  }
  const auto ex = extract_batch(g, usable, opts);
  std::size_t total_nodes = 0, total_edges = 0, ok = 0;
  for (const auto& e : ex) {
    if (!e.ok()) {
      ++st.empty;
      continue;
    }
    ++ok;
    ++(e.subgraph.directed ? st.directed : st.fallback);
    total_nodes += e.subgraph.num_nodes();
    total_edges += e.subgraph.num_edges();
    st.max_nodes = std::max(st.max_nodes, e.subgraph.num_nodes());
  }
  if (ok > 0) {
    st.mean_nodes = static_cast<double>(total_nodes) / static_cast<double>(ok);
    st.mean_edges = static_cast<double>(total_edges) / static_cast<double>(ok);
  }
  return st;
}

}  // namespace sgr
