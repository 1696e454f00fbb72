#include <gtest/gtest.h>

#include <map>
#include <random>

#include "oracles.hpp"
#include "sgr/errors.hpp"
#include "sgr/evaluator.hpp"
#include "test_util.hpp"

using namespace sgr;

namespace {

struct FiveTriplets {
  Graph g;
  std::vector<Triplet> tests;
  std::map<Triplet, double> scores;
};

// Five test triplets whose reversals are unknown, plus one whose reversal is
// a graph fact, and a fixed score per candidate.
FiveTriplets five_triplets() {
  FiveTriplets f;
  f.g = oracle::small_graph({{"a", "r", "b"}, {"c", "r", "d"}, {"e", "r", "f"}, {"g", "r", "h"},
                             {"i", "r", "j"}, {"l", "r", "k"}, {"a", "r", "c"}});
  auto id = [&](const char* n) { return *f.g.entities().find(n); };
  const char* pairs[6][2] = {{"a", "b"}, {"c", "d"}, {"e", "f"}, {"g", "h"}, {"i", "j"}, {"k", "l"}};
  const double pos[5] = {0.9, 0.8, 0.3, 0.6, 0.1};
  const double neg[5] = {0.2, 0.7, 0.4, 0.6, 0.05};
  for (int i = 0; i < 6; ++i) {
    const Triplet t{id(pairs[i][0]), 0, id(pairs[i][1])};
    f.tests.push_back(t);
    if (i < 5) {
      f.scores[t] = pos[i];
      f.scores[{t.tail, 0, t.head}] = neg[i];
    }
  }
  return f;
}

}  // namespace

TEST(Protocol, ParseNames) {
  EXPECT_EQ(parse_protocol("auc-one-negative"), Protocol::AucOneNegative);
  EXPECT_EQ(parse_protocol("hits-k"), Protocol::HitsAtK);
  EXPECT_EQ(parse_protocol("exchange-ht"), Protocol::ExchangeHeadTail);
  EXPECT_THROW(parse_protocol("mrr"), ConfigError);
}

TEST(Protocol, ExchangeOnHandComputedSet) {
  const auto f = five_triplets();
  const CandidateScorer scorer = [&](const Triplet& t) {
    return ScoredCandidate{f.scores.at(t), ExtractStatus::Ok, true};
  };
  ProtocolOptions opts;
  opts.protocol = Protocol::ExchangeHeadTail;
  const auto r = run_protocol(f.g, f.tests, scorer, opts);
  EXPECT_EQ(r.positives, 5u);
  EXPECT_EQ(r.negatives, 5u);
  EXPECT_EQ(r.skipped, 1u);
  // Positives {.9 .8 .6 .3 .1} vs negatives {.7 .6 .4 .2 .05}: 16.5 of 25
  // pairs won; precision at each positive 1, 1, 3/5, 4/7, 5/9.
  EXPECT_DOUBLE_EQ(r.auc_roc, 16.5 / 25.0);
  EXPECT_NEAR(r.auc_pr, (1.0 + 1.0 + 3.0 / 5.0 + 4.0 / 7.0 + 5.0 / 9.0) / 5.0, 1e-15);
  EXPECT_FALSE(r.hits_at_k.has_value());
  for (std::size_t i = 0; i < r.records.size(); i += 2) {
    const auto& p = r.records[i];
    const auto& n = r.records[i + 1];
    EXPECT_TRUE(p.positive);
    EXPECT_FALSE(n.positive);
    EXPECT_EQ(n.triplet, (Triplet{p.triplet.tail, p.triplet.relation, p.triplet.head}));
    EXPECT_EQ(p.rank, p.score > n.score ? 1u : 2u);
  }
}

TEST(Protocol, HitsAndOneNegative) {
  std::mt19937_64 rng(3);
  const Graph g = oracle::random_graph(80, 300, 3, rng);
  std::vector<Triplet> tests(g.triplets().begin(), g.triplets().begin() + 30);
  // Scorer prefers small head ids: an arbitrary but fixed ranking.
  const CandidateScorer scorer = [](const Triplet& t) {
    return ScoredCandidate{-static_cast<double>(t.head) + 0.001 * t.tail, ExtractStatus::Ok, true};
  };
  ProtocolOptions opts;
  opts.protocol = Protocol::HitsAtK;
  opts.num_negatives = 20;
  opts.k = 5;
  const auto r = run_protocol(g, tests, scorer, opts);
  ASSERT_TRUE(r.hits_at_k.has_value());
  EXPECT_EQ(r.negatives, 20 * r.positives);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < r.records.size(); i += 21) {
    std::vector<double> negs;
    for (std::size_t j = 1; j <= 20; ++j) {
      negs.push_back(r.records[i + j].score);
      EXPECT_FALSE(g.contains(r.records[i + j].triplet));
      EXPECT_EQ(r.records[i + j].group, r.records[i].group);
    }
    const auto rank = oracle::rank(r.records[i].score, negs);
    EXPECT_EQ(r.records[i].rank, rank);
    EXPECT_GE(rank, 1u);
    EXPECT_LE(rank, 21u);
    hits += rank <= 5 ? 1 : 0;
  }
  EXPECT_DOUBLE_EQ(*r.hits_at_k, static_cast<double>(hits) / static_cast<double>(r.positives));

  opts.protocol = Protocol::AucOneNegative;
  const auto one = run_protocol(g, tests, scorer, opts);
  EXPECT_EQ(one.negatives, one.positives);
  // Candidate sets depend only on the seed.
  const auto again = run_protocol(g, tests, scorer, opts);
  ASSERT_EQ(one.records.size(), again.records.size());
  for (std::size_t i = 0; i < one.records.size(); ++i) {
    EXPECT_EQ(one.records[i].triplet, again.records[i].triplet);
  }
}

TEST(Protocol, EmptyCountEqualsExtractorCount) {
  std::mt19937_64 rng(9);
  const Graph g = oracle::random_graph(120, 110, 2, rng);
  std::vector<Triplet> tests(g.triplets().begin(), g.triplets().begin() + 60);
  Model model(ModelConfig{.hop = 2, .iters = 2, .dim = 4, .score_hidden = 4}, 2, 1);
  ProtocolOptions opts;
  opts.extract.hop = 2;
  const auto r = run_protocol(g, tests, model_scorer(g, model, opts.extract, false), opts);
  std::size_t empty = 0, fallback = 0;
  for (const auto& rec : r.records) {
    const auto ex = extract_enclosing(g, rec.triplet, opts.extract);
    if (!ex.ok()) {
      ++empty;
      EXPECT_EQ(rec.score, kEmptySubgraphScore);
    } else if (!ex.subgraph.directed) {
      ++fallback;
    }
  }
  EXPECT_GT(empty, 0u);
  EXPECT_EQ(r.empty_positives + r.empty_negatives, empty);
  EXPECT_EQ(r.fallback_positives + r.fallback_negatives, fallback);
}

TEST(Protocol, RequireSubgraphNegativesHaveSubgraphs) {
  std::mt19937_64 rng(10);
  const Graph g = oracle::random_graph(50, 150, 2, rng);
  std::vector<Triplet> tests(g.triplets().begin(), g.triplets().begin() + 20);
  ProtocolOptions opts;
  opts.require_subgraph = true;
  opts.extract.hop = 2;
  const CandidateScorer scorer = [](const Triplet&) { return ScoredCandidate{}; };
  const auto r = run_protocol(g, tests, scorer, opts);
  for (const auto& rec : r.records) {
    if (!rec.positive) {
      EXPECT_TRUE(extract_undirected(g, rec.triplet, opts.extract).ok());
    }
  }
  EXPECT_THROW(run_protocol(g, {}, scorer, opts), ConfigError);
}

TEST(Report, SummaryScoresFileAndAveraging) {
  const auto f = five_triplets();
  const CandidateScorer scorer = [&](const Triplet& t) {
    return ScoredCandidate{f.scores.at(t), ExtractStatus::Ok, true};
  };
  ProtocolOptions opts;
  opts.protocol = Protocol::ExchangeHeadTail;
  const auto r = run_protocol(f.g, f.tests, scorer, opts);
  const std::string s = r.summary();
  EXPECT_NE(s.find("protocol=exchange-ht\n"), std::string::npos);
  EXPECT_NE(s.find("auc_roc=0.66000000000000003\n"), std::string::npos);
  EXPECT_NE(s.find("skipped=1\n"), std::string::npos);

  testing_util::TempDir dir;
  write_scores(dir / "s.tsv", f.g, r);
  const std::string tsv = testing_util::read_file(dir / "s.tsv");
  EXPECT_EQ(tsv.substr(0, tsv.find('\n')), "head\trelation\ttail\tlabel\tscore\trank");
  EXPECT_NE(tsv.find("a\tr\tb\t1\t0.90000000000000002\t1\n"), std::string::npos);
  EXPECT_NE(tsv.find("b\tr\ta\t0\t0.20000000000000001\t-\n"), std::string::npos);

  EvalReport other = r;
  other.auc_pr = 0.0;
  other.auc_roc = 0.0;
  const EvalReport both[2] = {r, other};
  const auto avg = average_reports(both);
  EXPECT_DOUBLE_EQ(avg.auc_roc, r.auc_roc / 2.0);
  EXPECT_DOUBLE_EQ(avg.auc_pr, r.auc_pr / 2.0);
}
