#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "sgr/errors.hpp"
#include "sgr/sampling.hpp"
#include "sgr/trainer.hpp"

using namespace sgr;

TEST(Sampling, ExchangeIsDeterministic) {
  const Graph g = oracle::small_graph({{"A", "r", "B"}, {"B", "s", "C"}});
  std::mt19937_64 rng(1);
  const auto neg = sample_negative(g, {0, 0, 1}, CorruptMode::ExchangeHeadTail, {}, rng);
  ASSERT_TRUE(neg.has_value());
  EXPECT_EQ(*neg, (Triplet{1, 0, 0}));
  // Reversal already a fact: no negative.
  const Graph sym = oracle::small_graph({{"A", "r", "B"}, {"B", "r", "A"}});
  EXPECT_FALSE(sample_negative(sym, {0, 0, 1}, CorruptMode::ExchangeHeadTail, {}, rng).has_value());
}

TEST(Sampling, ReplaceNeverReturnsKnownOrDegenerateTriplets) {
  std::mt19937_64 rng(2);
  const Graph g = oracle::random_graph(30, 120, 3, rng);
  for (int i = 0; i < 500; ++i) {
    const Triplet pos = g.triplet(static_cast<EdgeId>(rng() % g.num_triplets()));
    const auto mode = pick_replace_mode(NegativeMode::Mix, rng);
    const auto neg = sample_negative(g, pos, mode, {}, rng);
    ASSERT_TRUE(neg.has_value());
    EXPECT_NE(*neg, pos);
    EXPECT_FALSE(g.contains(*neg));
    EXPECT_NE(neg->head, neg->tail);
    EXPECT_EQ(neg->relation, pos.relation);
    if (mode == CorruptMode::ReplaceHead) {
      EXPECT_EQ(neg->tail, pos.tail);
    } else {
      EXPECT_EQ(neg->head, pos.head);
    }
  }
}

TEST(Sampling, RequireSubgraphUsesExtractorAsOracle) {
  std::mt19937_64 rng(3);
  const Graph g = oracle::random_graph(60, 90, 2, rng);
  SamplingOptions opts;
  opts.require_subgraph = true;
  opts.extract.hop = 2;
  int drawn = 0;
  for (int i = 0; i < 200; ++i) {
    const Triplet pos = g.triplet(static_cast<EdgeId>(rng() % g.num_triplets()));
    const auto neg = sample_negative(g, pos, pick_replace_mode(NegativeMode::Mix, rng), opts, rng);
    if (!neg) continue;
    ++drawn;
    EXPECT_TRUE(extract_undirected(g, *neg, opts.extract).ok());
  }
  EXPECT_GT(drawn, 100);
}

TEST(Sampling, AvoidSetAndExhaustedBudget) {
  // Only one entity besides A and B, and every alternative is excluded.
  const Graph g = oracle::small_graph({{"A", "r", "B"}, {"A", "r", "C"}});
  std::unordered_set<Triplet, TripletHash> avoid;
  std::mt19937_64 rng(4);
  SamplingOptions opts;
  opts.max_retries = 50;
  EXPECT_FALSE(sample_negative(g, {0, 0, 1}, CorruptMode::ReplaceTail, opts, rng, &avoid).has_value());
  const auto head = sample_negative(g, {0, 0, 1}, CorruptMode::ReplaceHead, opts, rng, &avoid);
  ASSERT_TRUE(head.has_value());
  EXPECT_EQ(*head, (Triplet{2, 0, 1}));
  avoid.insert({2, 0, 1});
  EXPECT_FALSE(sample_negative(g, {0, 0, 1}, CorruptMode::ReplaceHead, opts, rng, &avoid).has_value());
}

TEST(Sampling, ModesAndSeeds) {
  std::mt19937_64 rng(5);
  int heads = 0;
  for (int i = 0; i < 2000; ++i) heads += pick_replace_mode(NegativeMode::Mix, rng) == CorruptMode::ReplaceHead;
  EXPECT_NEAR(heads / 2000.0, 0.5, 0.05);
  EXPECT_EQ(pick_replace_mode(NegativeMode::Head, rng), CorruptMode::ReplaceHead);
  EXPECT_EQ(pick_replace_mode(NegativeMode::Tail, rng), CorruptMode::ReplaceTail);
  EXPECT_EQ(parse_negative_mode("tail"), NegativeMode::Tail);
  EXPECT_THROW(parse_negative_mode("both"), ConfigError);
  EXPECT_EQ(derive_seed(1, 2, 3), derive_seed(1, 2, 3));
  EXPECT_NE(derive_seed(1, 2, 3), derive_seed(1, 2, 4));
  EXPECT_NE(derive_seed(1, 2, 3), derive_seed(1, 3, 3));
  EXPECT_NE(derive_seed(1, 2, 3), derive_seed(2, 2, 3));
}

TEST(MarginLoss, HandExamples) {
  const double zero[1] = {0.0};
  EXPECT_EQ(margin_loss(1.0, zero, 0.5), 0.0);
  EXPECT_EQ(margin_loss(0.0, zero, 0.5), 0.5);
  EXPECT_THROW(margin_loss(0.0, std::span<const double>(), 0.5), ConfigError);
  EXPECT_THROW(margin_loss(0.0, zero, 0.0), ConfigError);
}

TEST(MarginLoss, MatchesLoopOracleAndTensorVersion) {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> dist(-5.0, 5.0);
  for (int trial = 0; trial < 200; ++trial) {
    const double pos = dist(rng), gamma = 0.1 + std::abs(dist(rng));
    std::vector<double> negs(1 + rng() % 5);
    for (auto& n : negs) n = dist(rng);
    double expected = 0.0;
    for (const double n : negs) expected += std::max(0.0, gamma - pos + n);
    expected /= static_cast<double>(negs.size());
    EXPECT_NEAR(margin_loss(pos, negs, gamma), expected, 1e-14);

    ad::Tape tape;
    std::vector<ad::Tensor> nt;
    for (const double n : negs) nt.push_back(tape.constant(Matrix(1, 1, n)));
    const auto t = margin_loss(tape.constant(Matrix(1, 1, pos)), nt, gamma);
    EXPECT_EQ(t.scalar(), margin_loss(pos, negs, gamma));
  }
}
