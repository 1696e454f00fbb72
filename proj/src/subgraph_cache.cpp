#include "sgr/subgraph_cache.hpp"

#include <cstring>
#include <fstream>
#include <sstream>

#include "sgr/errors.hpp"

namespace sgr {
namespace {

constexpr char kMagic[8] = {'S', 'G', 'R', 'S', 'U', 'B', 'C', '\0'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put(std::string& buf, T v) {
  char bytes[sizeof(T)];
  std::memcpy(bytes, &v, sizeof(T));
  buf.append(bytes, sizeof(T));
}

class Reader {
 public:
  Reader(const char* data, std::size_t size, const std::filesystem::path& file)
      : data_(data), size_(size), file_(file) {}

  template <typename T>
  T get() {
    if (pos_ + sizeof(T) > size_) throw FormatError(file_.string() + ": truncated cache record");
    T v;
    std::memcpy(&v, data_ + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  bool done() const { return pos_ == size_; }

 private:
  const char* data_;
  std::size_t size_;
  std::size_t pos_ = 0;
  const std::filesystem::path& file_;
};

std::string encode(const CacheKey& key, const Extraction& ex) {
  std::string b;
  put<std::int32_t>(b, key.target.head);
  put<std::int32_t>(b, key.target.relation);
  put<std::int32_t>(b, key.target.tail);
  put<std::uint32_t>(b, static_cast<std::uint32_t>(key.hop));
  put<std::uint8_t>(b, key.force_undirected ? 1 : 0);
  const Subgraph& s = ex.subgraph;
  put<std::uint8_t>(b, static_cast<std::uint8_t>(ex.status));
  put<std::uint8_t>(b, s.directed ? 1 : 0);
  put<std::uint32_t>(b, static_cast<std::uint32_t>(s.hop));
  put<std::int32_t>(b, s.target.head);
  put<std::int32_t>(b, s.target.relation);
  put<std::int32_t>(b, s.target.tail);
  put<std::uint32_t>(b, static_cast<std::uint32_t>(s.nodes.size()));
  for (std::size_t i = 0; i < s.nodes.size(); ++i) {
    put<std::int32_t>(b, s.nodes[i]);
    put<std::int32_t>(b, s.labels[i].from_head);
    put<std::int32_t>(b, s.labels[i].to_tail);
  }
  put<std::uint32_t>(b, static_cast<std::uint32_t>(s.edges.size()));
  for (const auto& e : s.edges) {
    put<std::int32_t>(b, e.head);
    put<std::int32_t>(b, e.relation);
    put<std::int32_t>(b, e.tail);
  }
  return b;
}

}  // namespace

std::optional<Extraction> SubgraphCache::find(const CacheKey& key) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void SubgraphCache::insert(const CacheKey& key, Extraction ex) {
  entries_.insert_or_assign(key, std::move(ex));
}

void SubgraphCache::save(const std::filesystem::path& file) const {
  std::string out(kMagic, sizeof(kMagic));
  put<std::uint32_t>(out, kVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(max_nodes_));
  put<std::uint64_t>(out, num_triplets_);
  for (const auto& [key, ex] : entries_) {
    const std::string rec = encode(key, ex);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(rec.size()));
    out += rec;
  }
  std::ofstream f(file, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot write " + file.string());
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw IoError("write failed: " + file.string());
}

SubgraphCache SubgraphCache::load(const std::filesystem::path& file, int max_nodes,
                                  std::size_t num_triplets) {
  std::ifstream f(file, std::ios::binary);
  if (!f) throw IoError("cannot open " + file.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  const std::string data = ss.str();
  Reader r(data.data(), data.size(), file);
  char magic[8];
  for (char& c : magic) c = r.get<char>();
  if (std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw FormatError(file.string() + ": not a subgraph cache");
  }
  if (r.get<std::uint32_t>() != kVersion) throw FormatError(file.string() + ": unsupported version");
  const auto file_cap = r.get<std::uint32_t>();
  const auto file_triplets = r.get<std::uint64_t>();
  if (static_cast<int>(file_cap) != max_nodes || file_triplets != num_triplets) {
    throw FormatError(file.string() + ": cache was built for a different graph or node cap");
  }
  SubgraphCache cache(max_nodes, num_triplets);
  while (!r.done()) {
    const auto len = r.get<std::uint32_t>();
    (void)len;
    CacheKey key;
    key.target.head = r.get<std::int32_t>();
    key.target.relation = r.get<std::int32_t>();
    key.target.tail = r.get<std::int32_t>();
    key.hop = static_cast<int>(r.get<std::uint32_t>());
    key.force_undirected = r.get<std::uint8_t>() != 0;
    Extraction ex;
    const auto status = r.get<std::uint8_t>();
    if (status > 2) throw FormatError(file.string() + ": bad status byte");
    ex.status = static_cast<ExtractStatus>(status);
    Subgraph& s = ex.subgraph;
    s.directed = r.get<std::uint8_t>() != 0;
    s.hop = static_cast<int>(r.get<std::uint32_t>());
    s.target.head = r.get<std::int32_t>();
    s.target.relation = r.get<std::int32_t>();
    s.target.tail = r.get<std::int32_t>();
    const auto n = r.get<std::uint32_t>();
    for (std::uint32_t i = 0; i < n; ++i) {
      s.nodes.push_back(r.get<std::int32_t>());
      NodeLabel l;
      l.from_head = r.get<std::int32_t>();
      l.to_tail = r.get<std::int32_t>();
      s.labels.push_back(l);
    }
    const auto m = r.get<std::uint32_t>();
    for (std::uint32_t i = 0; i < m; ++i) {
      LocalEdge e;
      e.head = r.get<std::int32_t>();
      e.relation = r.get<std::int32_t>();
      e.tail = r.get<std::int32_t>();
      if (e.head < 0 || e.tail < 0 || static_cast<std::uint32_t>(e.head) >= n ||
          static_cast<std::uint32_t>(e.tail) >= n) {
        throw FormatError(file.string() + ": edge endpoint out of range");
      }
      s.edges.push_back(e);
    }
    cache.entries_.emplace(key, std::move(ex));
  }
  return cache;
}

std::vector<Extraction> extract_batch_cached(const Graph& g, std::span<const Triplet> targets,
                                             const ExtractOptions& opts, bool force_undirected,
                                             SubgraphCache* cache) {
  if (cache == nullptr) return extract_batch(g, targets, opts, force_undirected);
  std::vector<Extraction> out(targets.size());
  std::vector<Triplet> misses;
  std::vector<std::size_t> miss_pos;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    if (auto hit = cache->find({targets[i], opts.hop, force_undirected})) {
      out[i] = std::move(*hit);
    } else {
      misses.push_back(targets[i]);
      miss_pos.push_back(i);
    }
  }
  auto fresh = extract_batch(g, misses, opts, force_undirected);
  for (std::size_t j = 0; j < fresh.size(); ++j) {
    cache->insert({misses[j], opts.hop, force_undirected}, fresh[j]);
    out[miss_pos[j]] = std::move(fresh[j]);
  }
  return out;
}

}  // namespace sgr
