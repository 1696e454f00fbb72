#pragma once

#include <compare>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "sgr/subgraph.hpp"

namespace sgr {

struct CacheKey {
  Triplet target;
  int hop = 0;
  bool force_undirected = false;

  friend auto operator<=>(const CacheKey&, const CacheKey&) = default;
};

// Extraction results keyed by candidate and extraction settings. A cache is
// tied to one graph and one node cap; the file header records the cap and
// the graph size so a mismatched file is rejected on load.
//
// File layout (little-endian):
//   magic "SGRSUBC\0", u32 version, u32 max_nodes, u64 num_triplets
//   records: u32 byte length, then
//     i32 head, relation, tail; u32 hop; u8 force_undirected;
//     u8 status; u8 directed; u32 subgraph hop; i32 target head, relation, tail;
//     u32 node count, per node i32 entity, from_head, to_tail;
//     u32 edge count, per edge i32 head, relation, tail
class SubgraphCache {
 public:
  SubgraphCache(int max_nodes, std::size_t num_triplets)
      : max_nodes_(max_nodes), num_triplets_(num_triplets) {}

  std::optional<Extraction> find(const CacheKey& key) const;
  void insert(const CacheKey& key, Extraction ex);
  std::size_t size() const noexcept { return entries_.size(); }

  void save(const std::filesystem::path& file) const;
  // Throws FormatError on a corrupt file or one written for other settings.
  static SubgraphCache load(const std::filesystem::path& file, int max_nodes,
                            std::size_t num_triplets);

 private:
  int max_nodes_;
  std::size_t num_triplets_;
  std::map<CacheKey, Extraction> entries_;
};

// extract_batch that consults and fills `cache` (may be null). Output is
// identical with and without a cache.
std::vector<Extraction> extract_batch_cached(const Graph& g, std::span<const Triplet> targets,
                                             const ExtractOptions& opts, bool force_undirected,
                                             SubgraphCache* cache);

}  // namespace sgr
