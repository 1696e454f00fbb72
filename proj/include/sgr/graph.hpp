#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace sgr {

using EntityId = std::int32_t;
using RelationId = std::int32_t;
using EdgeId = std::int32_t;

struct Triplet {
  EntityId head = 0;
  RelationId relation = 0;
  EntityId tail = 0;

  friend auto operator<=>(const Triplet&, const Triplet&) = default;
};

struct TripletHash {
  std::size_t operator()(const Triplet& t) const noexcept {
    std::uint64_t h = static_cast<std::uint32_t>(t.head);
    h = h * 0x9E3779B97F4A7C15ull ^ static_cast<std::uint32_t>(t.relation);
    h = h * 0x9E3779B97F4A7C15ull ^ static_cast<std::uint32_t>(t.tail);
    return static_cast<std::size_t>(h ^ (h >> 29));
  }
};

// Dense id <-> name map. Ids are assigned in first-seen order.
class Vocabulary {
 public:
  std::int32_t intern(std::string_view name);
  std::optional<std::int32_t> find(std::string_view name) const;
  const std::string& name(std::int32_t id) const { return names_.at(static_cast<std::size_t>(id)); }
  std::int32_t size() const noexcept { return static_cast<std::int32_t>(names_.size()); }
  const std::vector<std::string>& names() const noexcept { return names_; }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, std::int32_t> ids_;
};

struct Vocabularies {
  Vocabulary entities;
  Vocabulary relations;
};

enum class VocabMode { Build, Reuse };

// Immutable directed multigraph of (head, relation, tail) triplets. Exact
// duplicate triplets are dropped on construction; self-loops are kept.
class Graph {
 public:
  Graph() = default;
  Graph(std::vector<Triplet> triplets, Vocabularies vocab);

  std::int32_t num_entities() const noexcept { return vocab_.entities.size(); }
  std::int32_t num_relations() const noexcept { return vocab_.relations.size(); }
  std::size_t num_triplets() const noexcept { return triplets_.size(); }
  std::size_t duplicates_dropped() const noexcept { return duplicates_dropped_; }

  const std::vector<Triplet>& triplets() const noexcept { return triplets_; }
  const Triplet& triplet(EdgeId e) const { return triplets_[static_cast<std::size_t>(e)]; }

  std::span<const EdgeId> out_edges(EntityId e) const;
  std::span<const EdgeId> in_edges(EntityId e) const;

  bool contains(const Triplet& t) const { return lookup_.contains(t); }
  std::optional<EdgeId> find(const Triplet& t) const;

  const Vocabulary& entities() const noexcept { return vocab_.entities; }
  const Vocabulary& relations() const noexcept { return vocab_.relations; }
  const Vocabularies& vocabularies() const noexcept { return vocab_; }

  // Same vocabularies, every edge direction flipped.
  Graph reversed() const;

  std::string describe(const Triplet& t) const;

 private:
  std::vector<Triplet> triplets_;
  Vocabularies vocab_;
  std::unordered_map<Triplet, EdgeId, TripletHash> lookup_;
  // CSR adjacency: edges of entity e are ids_[offsets_[e] .. offsets_[e+1]).
  std::vector<std::size_t> out_offsets_, in_offsets_;
  std::vector<EdgeId> out_ids_, in_ids_;
  std::size_t duplicates_dropped_ = 0;
};

struct TripletParseResult {
  std::vector<Triplet> triplets;
  std::size_t lines = 0;
};

// Parses `head<TAB>relation<TAB>tail` lines, interning names into `vocab`.
// With `allow_new_relations` false an unknown relation is a VocabularyError.
TripletParseResult parse_triplet_file(const std::filesystem::path& file, Vocabularies& vocab,
                                      bool allow_new_entities, bool allow_new_relations);

// Loads a graph file. In Reuse mode `reuse` seeds both vocabularies: unseen
// entities are appended, unseen relations are rejected. Entities mentioned in
// `entity_sources` (query files) are registered without adding edges.
Graph load_graph(const std::filesystem::path& file, VocabMode mode,
                 const Vocabularies* reuse = nullptr,
                 std::span<const std::filesystem::path> entity_sources = {});

// Reads query triplets against an existing graph's vocabularies; unknown
// names are errors.
std::vector<Triplet> read_triplets(const std::filesystem::path& file, const Graph& g);

void write_triplets(const std::filesystem::path& file, const Graph& g,
                    std::span<const Triplet> triplets);

// Neighborhood queries. Results are sorted ascending. `excluded` removes one
// edge from the traversal. The start entity is included only when it lies on
// a cycle of length <= k.
std::vector<EntityId> k_hop_outgoing(const Graph& g, EntityId start, int k,
                                     std::optional<EdgeId> excluded = std::nullopt);
std::vector<EntityId> k_hop_incoming(const Graph& g, EntityId start, int k,
                                     std::optional<EdgeId> excluded = std::nullopt);
std::vector<EntityId> k_hop_undirected(const Graph& g, EntityId start, int k,
                                       std::optional<EdgeId> excluded = std::nullopt);

// Edges with both endpoints in `nodes` (sorted ascending), minus `exclude`.
// Returned edge ids are ascending.
std::vector<EdgeId> induced_edges(const Graph& g, std::span<const EntityId> nodes,
                                  std::optional<Triplet> exclude = std::nullopt);

}  // namespace sgr
