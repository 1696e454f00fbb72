#include "sgr/synthetic.hpp"

#include <algorithm>
#include <fstream>
#include <random>

#include "sgr/errors.hpp"

namespace sgr {

ChainDataset make_chain_dataset(const ChainOptions& opts) {
  if (opts.chains < 1 || opts.length < 3) throw ConfigError("need >= 1 chain of length >= 3");
  std::mt19937_64 rng(opts.seed);
  auto name = [&](int c, int i) {
    return opts.prefix + std::to_string(c) + "_" + std::to_string(i);
  };
  ChainDataset ds;
  std::vector<NamedTriplet> skips;
  for (int c = 0; c < opts.chains; ++c) {
    for (int i = 0; i + 1 < opts.length; ++i) ds.graph.push_back({name(c, i), "next", name(c, i + 1)});
    for (int i = 0; i + 2 < opts.length; ++i) skips.push_back({name(c, i), "skip", name(c, i + 2)});
    std::bernoulli_distribution jump(opts.jump_rate);
    for (int i = 0; i + 3 < opts.length; ++i) {
      if (jump(rng)) ds.graph.push_back({name(c, i), "jump", name(c, i + 3)});
    }
  }
  if (opts.chains > 1) {
    std::uniform_int_distribution<int> chain(0, opts.chains - 1);
    std::uniform_int_distribution<int> pos(0, opts.length - 1);
    for (int k = 0; k < opts.cross_links; ++k) {
      const int a = chain(rng);
      int b = chain(rng);
      while (b == a) b = chain(rng);
      ds.graph.push_back({name(a, pos(rng)), "link", name(b, pos(rng))});
    }
  }
  std::shuffle(skips.begin(), skips.end(), rng);
  const auto held = static_cast<std::size_t>(opts.held_out * static_cast<double>(skips.size()));
  const auto to_valid = static_cast<std::size_t>(opts.valid_share * static_cast<double>(held));
  for (std::size_t i = 0; i < skips.size(); ++i) {
    if (i < to_valid) {
      ds.valid.push_back(skips[i]);
    } else if (i < held) {
      ds.test.push_back(skips[i]);
    } else {
      ds.graph.push_back(skips[i]);
    }
  }
  if (opts.stray_queries > 0) {
    // Isolated two-node chains: linked only by `next`, never to anything else.
    for (int k = 0; k < opts.stray_queries; ++k) {
      const std::string a = opts.prefix + "s" + std::to_string(k) + "_a";
      const std::string b = opts.prefix + "s" + std::to_string(k) + "_b";
      const std::string z = opts.prefix + "s" + std::to_string(k) + "_z";
      ds.graph.push_back({a, "next", b});
      ds.test.push_back({a, "skip", z});
      ds.graph.push_back({z, "next", opts.prefix + "s" + std::to_string(k) + "_y"});
    }
  }
  return ds;
}

void write_named(const std::filesystem::path& file, const std::vector<NamedTriplet>& triplets) {
  std::ofstream out(file);
  if (!out) throw IoError("cannot write " + file.string());
  for (const auto& t : triplets) out << t.head << '\t' << t.relation << '\t' << t.tail << '\n';
  if (!out) throw IoError("write failed: " + file.string());
}

Graph graph_from_named(const std::vector<NamedTriplet>& triplets, const Vocabularies* reuse) {
  Vocabularies vocab;
  if (reuse != nullptr) vocab = *reuse;
  const bool fixed_relations = reuse != nullptr;
  std::vector<Triplet> ids;
  ids.reserve(triplets.size());
  for (const auto& t : triplets) {
    RelationId r;
    if (fixed_relations) {
      const auto found = vocab.relations.find(t.relation);
      if (!found) throw VocabularyError("unknown relation '" + t.relation + "'");
      r = *found;
    } else {
      r = vocab.relations.intern(t.relation);
    }
    const auto h = vocab.entities.intern(t.head);
    const auto tl = vocab.entities.intern(t.tail);
    ids.push_back({h, r, tl});
  }
  return Graph(std::move(ids), std::move(vocab));
}

std::vector<Triplet> resolve_named(const Graph& g, const std::vector<NamedTriplet>& triplets) {
  std::vector<Triplet> out;
  out.reserve(triplets.size());
  for (const auto& t : triplets) {
    const auto h = g.entities().find(t.head);
    const auto r = g.relations().find(t.relation);
    const auto tl = g.entities().find(t.tail);
    if (!h || !r || !tl) {
      throw VocabularyError("unknown name in " + t.head + " " + t.relation + " " + t.tail);
    }
    out.push_back({*h, *r, *tl});
  }
  return out;
}

}  // namespace sgr
