#include "sgr/graph.hpp"

#include <algorithm>
#include <fstream>
#include <unordered_set>

#include "sgr/errors.hpp"
#include "sgr/log.hpp"

namespace sgr {

std::int32_t Vocabulary::intern(std::string_view name) {
  if (auto it = ids_.find(std::string(name)); it != ids_.end()) return it->second;
  const auto id = static_cast<std::int32_t>(names_.size());
  names_.emplace_back(name);
  ids_.emplace(names_.back(), id);
  return id;
}

std::optional<std::int32_t> Vocabulary::find(std::string_view name) const {
  if (auto it = ids_.find(std::string(name)); it != ids_.end()) return it->second;
  return std::nullopt;
}

Graph::Graph(std::vector<Triplet> triplets, Vocabularies vocab) : vocab_(std::move(vocab)) {
  const auto n = static_cast<std::size_t>(vocab_.entities.size());
  triplets_.reserve(triplets.size());
  for (const auto& t : triplets) {
    if (t.head < 0 || t.tail < 0 || static_cast<std::size_t>(t.head) >= n ||
        static_cast<std::size_t>(t.tail) >= n) {
      throw VocabularyError("triplet entity id out of range");
    }
    if (t.relation < 0 || t.relation >= vocab_.relations.size()) {
      throw VocabularyError("triplet relation id out of range");
    }
    auto [it, inserted] = lookup_.emplace(t, static_cast<EdgeId>(triplets_.size()));
    if (!inserted) {
      ++duplicates_dropped_;
      continue;
    }
    triplets_.push_back(t);
  }

  out_offsets_.assign(n + 1, 0);
  in_offsets_.assign(n + 1, 0);
  for (const auto& t : triplets_) {
    ++out_offsets_[static_cast<std::size_t>(t.head) + 1];
    ++in_offsets_[static_cast<std::size_t>(t.tail) + 1];
  }
  for (std::size_t i = 0; i < n; ++i) {
    out_offsets_[i + 1] += out_offsets_[i];
    in_offsets_[i + 1] += in_offsets_[i];
  }
  out_ids_.resize(triplets_.size());
  in_ids_.resize(triplets_.size());
  std::vector<std::size_t> out_fill(out_offsets_.begin(), out_offsets_.end() - 1);
  std::vector<std::size_t> in_fill(in_offsets_.begin(), in_offsets_.end() - 1);
  for (std::size_t e = 0; e < triplets_.size(); ++e) {
    const auto& t = triplets_[e];
    out_ids_[out_fill[static_cast<std::size_t>(t.head)]++] = static_cast<EdgeId>(e);
    in_ids_[in_fill[static_cast<std::size_t>(t.tail)]++] = static_cast<EdgeId>(e);
  }
}

std::span<const EdgeId> Graph::out_edges(EntityId e) const {
  const auto i = static_cast<std::size_t>(e);
  return {out_ids_.data() + out_offsets_[i], out_offsets_[i + 1] - out_offsets_[i]};
}

std::span<const EdgeId> Graph::in_edges(EntityId e) const {
  const auto i = static_cast<std::size_t>(e);
  return {in_ids_.data() + in_offsets_[i], in_offsets_[i + 1] - in_offsets_[i]};
}

std::optional<EdgeId> Graph::find(const Triplet& t) const {
  if (auto it = lookup_.find(t); it != lookup_.end()) return it->second;
  return std::nullopt;
}

Graph Graph::reversed() const {
  std::vector<Triplet> flipped;
  flipped.reserve(triplets_.size());
  for (const auto& t : triplets_) flipped.push_back({t.tail, t.relation, t.head});
  return Graph(std::move(flipped), vocab_);
}

std::string Graph::describe(const Triplet& t) const {
  return entities().name(t.head) + "\t" + relations().name(t.relation) + "\t" + entities().name(t.tail);
}

namespace {

struct RawLine {
  std::string_view head, relation, tail;
};

RawLine split_line(std::string_view line, const std::string& file, std::size_t lineno) {
  const auto first = line.find('\t');
  const auto second = first == std::string_view::npos ? first : line.find('\t', first + 1);
  if (first == std::string_view::npos || second == std::string_view::npos ||
      line.find('\t', second + 1) != std::string_view::npos) {
    throw ParseError(file, lineno, "expected exactly three TAB-separated fields");
  }
  RawLine raw{line.substr(0, first), line.substr(first + 1, second - first - 1),
              line.substr(second + 1)};
  if (raw.head.empty() || raw.relation.empty() || raw.tail.empty()) {
    throw ParseError(file, lineno, "empty field");
  }
  return raw;
}

template <typename Fn>
void for_each_line(const std::filesystem::path& file, Fn&& fn) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw IoError("cannot open " + file.string());
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    fn(std::string_view(line), lineno);
  }
}

}  // namespace

TripletParseResult parse_triplet_file(const std::filesystem::path& file, Vocabularies& vocab,
                                      bool allow_new_entities, bool allow_new_relations) {
  TripletParseResult result;
  const std::string name = file.string();
  for_each_line(file, [&](std::string_view line, std::size_t lineno) {
    result.lines = lineno;
    const auto raw = split_line(line, name, lineno);
    auto entity = [&](std::string_view s) -> EntityId {
      if (allow_new_entities) return vocab.entities.intern(s);
      if (auto id = vocab.entities.find(s)) return *id;
      throw VocabularyError(name + ":" + std::to_string(lineno) + ": unknown entity '" +
                            std::string(s) + "'");
    };
    RelationId rel;
    if (allow_new_relations) {
      rel = vocab.relations.intern(raw.relation);
    } else if (auto id = vocab.relations.find(raw.relation)) {
      rel = *id;
    } else {
      throw VocabularyError(name + ":" + std::to_string(lineno) + ": unknown relation '" +
                            std::string(raw.relation) + "'");
    }
    const EntityId h = entity(raw.head);
    const EntityId t = entity(raw.tail);
    result.triplets.push_back({h, rel, t});
  });
  return result;
}

Graph load_graph(const std::filesystem::path& file, VocabMode mode, const Vocabularies* reuse,
                 std::span<const std::filesystem::path> entity_sources) {
  Vocabularies vocab;
  if (mode == VocabMode::Reuse) {
    if (reuse == nullptr) throw VocabularyError("reuse mode requires vocabularies");
    vocab = *reuse;
  }
  auto parsed = parse_triplet_file(file, vocab, true, mode == VocabMode::Build);
  for (const auto& extra : entity_sources) {
    Vocabularies scratch = vocab;
    parse_triplet_file(extra, scratch, true, false);
    vocab.entities = std::move(scratch.entities);
  }
  Graph g(std::move(parsed.triplets), std::move(vocab));
  if (g.duplicates_dropped() > 0) {
    log::warn(file.string() + ": dropped " + std::to_string(g.duplicates_dropped()) +
              " duplicate triplet(s)");
  }
  return g;
}

std::vector<Triplet> read_triplets(const std::filesystem::path& file, const Graph& g) {
  Vocabularies vocab = g.vocabularies();
  return parse_triplet_file(file, vocab, false, false).triplets;
}

void write_triplets(const std::filesystem::path& file, const Graph& g,
                    std::span<const Triplet> triplets) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw IoError("cannot write " + file.string());
  for (const auto& t : triplets) out << g.describe(t) << '\n';
  if (!out) throw IoError("write failed for " + file.string());
}

namespace {

enum class Direction { Out, In, Both };

std::vector<EntityId> k_hop(const Graph& g, EntityId start, int k, Direction dir,
                            std::optional<EdgeId> excluded) {
  std::unordered_set<EntityId> visited;
  std::vector<EntityId> frontier{start};
  std::vector<EntityId> next;
  auto visit = [&](EdgeId e, EntityId other) {
    if (excluded && e == *excluded) return;
    if (visited.insert(other).second) next.push_back(other);
  };
  for (int depth = 0; depth < k && !frontier.empty(); ++depth) {
    next.clear();
    for (const EntityId u : frontier) {
      if (dir != Direction::In) {
        for (const EdgeId e : g.out_edges(u)) visit(e, g.triplet(e).tail);
      }
      if (dir != Direction::Out) {
        for (const EdgeId e : g.in_edges(u)) visit(e, g.triplet(e).head);
      }
    }
    frontier.swap(next);
  }
  std::vector<EntityId> result(visited.begin(), visited.end());
  std::sort(result.begin(), result.end());
  return result;
}

}  // namespace

std::vector<EntityId> k_hop_outgoing(const Graph& g, EntityId start, int k,
                                     std::optional<EdgeId> excluded) {
  return k_hop(g, start, k, Direction::Out, excluded);
}

std::vector<EntityId> k_hop_incoming(const Graph& g, EntityId start, int k,
                                     std::optional<EdgeId> excluded) {
  return k_hop(g, start, k, Direction::In, excluded);
}

std::vector<EntityId> k_hop_undirected(const Graph& g, EntityId start, int k,
                                       std::optional<EdgeId> excluded) {
  return k_hop(g, start, k, Direction::Both, excluded);
}

std::vector<EdgeId> induced_edges(const Graph& g, std::span<const EntityId> nodes,
                                  std::optional<Triplet> exclude) {
  std::vector<EdgeId> edges;
  for (const EntityId u : nodes) {
    for (const EdgeId e : g.out_edges(u)) {
      const auto& t = g.triplet(e);
      if (exclude && t == *exclude) continue;
      if (std::binary_search(nodes.begin(), nodes.end(), t.tail)) edges.push_back(e);
    }
  }
  std::sort(edges.begin(), edges.end());
  return edges;
}

}  // namespace sgr
