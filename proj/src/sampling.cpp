#include "sgr/sampling.hpp"

#include "sgr/errors.hpp"

namespace sgr {

const char* to_string(NegativeMode m) {
  switch (m) {
    case NegativeMode::Mix: return "mix";
    case NegativeMode::Head: return "head";
    case NegativeMode::Tail: return "tail";
  }
  return "?";
}

NegativeMode parse_negative_mode(const std::string& s) {
  if (s == "mix") return NegativeMode::Mix;
  if (s == "head") return NegativeMode::Head;
  if (s == "tail") return NegativeMode::Tail;
  throw ConfigError("unknown negative mode '" + s + "' (mix, head, tail)");
}

bool has_enclosing_subgraph(const Graph& g, const Triplet& t, const ExtractOptions& opts) {
  if (t.head == t.tail) return false;
  return extract_undirected(g, t, opts).ok();
}

std::optional<Triplet> sample_negative(const Graph& g, const Triplet& pos, CorruptMode mode,
                                       const SamplingOptions& opts, std::mt19937_64& rng,
                                       const std::unordered_set<Triplet, TripletHash>* avoid) {
  if (g.num_entities() == 0) throw ConfigError("cannot sample negatives from an empty graph");
  auto known = [&](const Triplet& t) {
    return g.contains(t) || (avoid != nullptr && avoid->contains(t));
  };
  if (mode == CorruptMode::ExchangeHeadTail) {
    const Triplet swapped{pos.tail, pos.relation, pos.head};
    if (known(swapped) || swapped.head == swapped.tail) return std::nullopt;
    return swapped;
  }
  std::uniform_int_distribution<EntityId> pick(0, g.num_entities() - 1);
  for (int attempt = 0; attempt < opts.max_retries; ++attempt) {
    Triplet cand = pos;
    if (mode == CorruptMode::ReplaceHead) {
      cand.head = pick(rng);
    } else {
      cand.tail = pick(rng);
    }
    if (cand == pos || cand.head == cand.tail || known(cand)) continue;
    if (opts.require_subgraph && !has_enclosing_subgraph(g, cand, opts.extract)) continue;
    return cand;
  }
  return std::nullopt;
}

CorruptMode pick_replace_mode(NegativeMode mode, std::mt19937_64& rng) {
  switch (mode) {
    case NegativeMode::Head: return CorruptMode::ReplaceHead;
    case NegativeMode::Tail: return CorruptMode::ReplaceTail;
    case NegativeMode::Mix: break;
  }
  return std::bernoulli_distribution(0.5)(rng) ? CorruptMode::ReplaceHead : CorruptMode::ReplaceTail;
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stage, std::uint64_t index) {
  // splitmix64 over the mixed inputs
  std::uint64_t z = base ^ (stage * 0x9E3779B97F4A7C15ull) ^ (index * 0xD1B54A32D192ED03ull);
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

}  // namespace sgr
