#include <gtest/gtest.h>

#include <cstring>

#include "model_check.hpp"
#include "oracles.hpp"
#include "sgr/checkpoint.hpp"
#include "sgr/errors.hpp"
#include "sgr/model.hpp"
#include "test_util.hpp"

using namespace sgr;
using ad::Tensor;

namespace {

Subgraph chain_subgraph() {
  // head -> x -> tail with the target (head, 1, tail) hidden; plus tail -> head.
  const Graph g = oracle::small_graph(
      {{"H", "r0", "X"}, {"X", "r0", "T"}, {"H", "r1", "T"}, {"T", "r2", "H"}});
  const auto ex = extract_directed(g, {0, 1, 2}, {.hop = 1, .max_nodes = 500});
  EXPECT_TRUE(ex.ok());
  return ex.subgraph;
}

ModelConfig small_config() {
  ModelConfig cfg;
  cfg.hop = 2;
  cfg.iters = 3;
  cfg.dim = 6;
  cfg.score_hidden = 4;
  return cfg;
}

void fill(Matrix& m, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  for (double& v : m.data) v = dist(rng);
}

}  // namespace

TEST(NodeInit, OneHotPairs) {
  Subgraph s;
  s.nodes = {7, 8, 9};
  s.labels = {{0, 2}, {1, 1}, {2, 0}};
  const Matrix m = model::init_node_embeddings(s, 1);
  ASSERT_EQ(m.cols, 6u);
  EXPECT_EQ(std::vector<double>(m.row(0).begin(), m.row(0).end()),
            (std::vector<double>{1, 0, 0, 0, 0, 1}));
  for (std::size_t i = 0; i < m.rows; ++i) {
    double sum = 0;
    for (const double v : m.row(i)) sum += v;
    EXPECT_EQ(sum, 2.0);
  }
  EXPECT_EQ(model::init_node_embeddings(s, 3).cols, 10u);
  s.labels[1] = {3, 1};
  EXPECT_THROW(model::init_node_embeddings(s, 1), DimensionError);
}

TEST(EdgeInit, RowsConcatenateHeadRelationTail) {
  const int hop = 3, d = 32;
  const auto sub = model_check::find_subgraph(6, hop, 3);
  ad::Tape tape;
  std::mt19937_64 rng(1);
  Matrix rel(4, static_cast<std::size_t>(d));
  fill(rel, rng);
  const Matrix nodes = model::init_node_embeddings(sub, hop);
  const Tensor e =
      model::init_edge_embeddings(sub, tape.constant(nodes), tape.constant(rel));
  ASSERT_EQ(e.cols(), static_cast<std::size_t>(4 * (hop + 2) + d));
  const std::size_t w = nodes.cols;
  for (std::size_t i = 0; i < sub.num_edges(); ++i) {
    const auto& le = sub.edges[i];
    for (std::size_t c = 0; c < w; ++c) {
      EXPECT_EQ(e.value()(i, c), nodes(static_cast<std::size_t>(le.head), c));
      EXPECT_EQ(e.value()(i, w + static_cast<std::size_t>(d) + c),
                nodes(static_cast<std::size_t>(le.tail), c));
    }
    for (std::size_t c = 0; c < static_cast<std::size_t>(d); ++c) {
      EXPECT_EQ(e.value()(i, w + c), rel(static_cast<std::size_t>(le.relation), c));
    }
  }
}

TEST(Project, ZeroIdentityAndRandomWeights) {
  ad::Tape tape;
  std::mt19937_64 rng(2);
  Matrix ni(3, 4), ei(5, 4);
  fill(ni, rng);
  fill(ei, rng);
  const Tensor n = tape.constant(ni), e = tape.constant(ei);
  const auto zero = model::project(n, e, tape.constant(Matrix(4, 3)), tape.constant(Matrix(4, 3)),
                                   Activation::Relu);
  EXPECT_EQ(zero.nodes.value(), Matrix(3, 3));
  EXPECT_EQ(zero.edges.value(), Matrix(5, 3));
  const auto id = model::project(n, e, tape.constant(Matrix::identity(4)),
                                 tape.constant(Matrix::identity(4)), Activation::Tanh);
  for (std::size_t i = 0; i < ni.size(); ++i) EXPECT_EQ(id.nodes.value().data[i], std::tanh(ni.data[i]));
  Matrix w(4, 2);
  fill(w, rng);
  const auto r = model::project(n, e, tape.constant(w), tape.constant(w), Activation::Relu);
  for (std::size_t i = 0; i < 5; ++i) {
    for (std::size_t j = 0; j < 2; ++j) {
      double acc = 0;
      for (std::size_t k = 0; k < 4; ++k) acc += ei(i, k) * w(k, j);
      EXPECT_NEAR(r.edges.value()(i, j), std::max(acc, 0.0), 1e-15);
    }
  }
}

TEST(Attention, ZeroWeightsGiveOneHalf) {
  const auto sub = chain_subgraph();
  const auto inc = build_incidence(sub, 3);
  ad::Tape tape;
  std::mt19937_64 rng(3);
  Matrix nodes(sub.num_nodes(), 4), edges(sub.num_edges(), 4), rel(3, 4);
  fill(nodes, rng);
  fill(edges, rng);
  fill(rel, rng);
  const auto att = model::edge_attention(tape.constant(nodes), tape.constant(edges),
                                         tape.constant(rel), sub, inc,
                                         tape.constant(Matrix(8, 4)), tape.constant(Matrix(4, 1)),
                                         Activation::Relu, AttentionMode::Enhanced);
  for (const double a : att.weights.value().data) EXPECT_EQ(a, 0.5);
  for (std::size_t i = 0; i < edges.size(); ++i) {
    EXPECT_EQ(att.attended.value().data[i], 0.5 * edges.data[i]);
  }
}

TEST(Attention, MatchesScalarPathOracle) {
  std::mt19937_64 rng(4);
  const std::size_t d = 5;
  for (int trial = 0; trial < 10; ++trial) {
    const auto sub = model_check::find_subgraph(5 + static_cast<std::size_t>(trial % 3), 2,
                                                static_cast<std::uint64_t>(trial));
    const auto inc = build_incidence(sub, 4);
    Matrix nodes(sub.num_nodes(), d), edges(sub.num_edges(), d), rel(4, d), w1(2 * d, d), w2(d, 1);
    for (Matrix* m : {&nodes, &edges, &rel, &w1, &w2}) fill(*m, rng);
    ad::Tape tape;
    const auto att = model::edge_attention(tape.constant(nodes), tape.constant(edges),
                                           tape.constant(rel), sub, inc, tape.constant(w1),
                                           tape.constant(w2), Activation::Relu,
                                           AttentionMode::Enhanced);
    auto translation = [&](int h, int r, int t) {
      std::vector<double> v(d);
      for (std::size_t c = 0; c < d; ++c) {
        v[c] = nodes(static_cast<std::size_t>(h), c) + rel(static_cast<std::size_t>(r), c) -
               nodes(static_cast<std::size_t>(t), c);
      }
      return v;
    };
    const auto target = translation(sub.target.head, sub.target.relation, sub.target.tail);
    for (std::size_t i = 0; i < sub.num_edges(); ++i) {
      auto x = translation(sub.edges[i].head, sub.edges[i].relation, sub.edges[i].tail);
      x.insert(x.end(), target.begin(), target.end());
      double logit = 0;
      for (std::size_t j = 0; j < d; ++j) {
        double hidden = 0;
        for (std::size_t k = 0; k < 2 * d; ++k) hidden += x[k] * w1(k, j);
        logit += std::max(hidden, 0.0) * w2(j, 0);
      }
      const double a = 1.0 / (1.0 + std::exp(-logit));
      EXPECT_NEAR(att.weights.value()(i, 0), a, 1e-14);
      EXPECT_GT(att.weights.value()(i, 0), 0.0);
      EXPECT_LT(att.weights.value()(i, 0), 1.0);
      for (std::size_t c = 0; c < d; ++c) {
        EXPECT_NEAR(att.attended.value()(i, c), a * edges(i, c), 1e-14);
      }
    }
  }
}

TEST(Attention, AblationModes) {
  const auto sub = chain_subgraph();
  const auto inc = build_incidence(sub, 3);
  ad::Tape tape;
  std::mt19937_64 rng(5);
  Matrix nodes(sub.num_nodes(), 3), edges(sub.num_edges(), 3), rel(3, 3), w1(6, 3), w2(3, 1);
  for (Matrix* m : {&nodes, &edges, &rel, &w1, &w2}) fill(*m, rng);
  const auto none = model::edge_attention(tape.constant(nodes), tape.constant(edges),
                                          tape.constant(rel), sub, inc, tape.constant(w1),
                                          tape.constant(w2), Activation::Relu, AttentionMode::None);
  EXPECT_EQ(none.attended.value(), edges);
  const auto rel_only = model::edge_attention(
      tape.constant(nodes), tape.constant(edges), tape.constant(rel), sub, inc,
      tape.constant(w1), tape.constant(w2), Activation::Relu, AttentionMode::RelationOnly);
  for (const double a : rel_only.weights.value().data) {
    EXPECT_GT(a, 0.0);
    EXPECT_LT(a, 1.0);
  }
}

TEST(NodeUpdate, AggregatesIncomingEdgesOnly) {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 10; ++trial) {
    const auto sub = model_check::find_subgraph(5, 2, static_cast<std::uint64_t>(100 + trial));
    const auto inc = build_incidence(sub, 4);
    Matrix att(sub.num_edges(), 3);
    fill(att, rng);
    ad::Tape tape;
    const Matrix& agg = model::aggregate_incoming(tape.constant(att), inc).value();
    for (std::size_t v = 0; v < sub.num_nodes(); ++v) {
      for (std::size_t c = 0; c < 3; ++c) {
        double acc = 0;
        for (std::size_t e = 0; e < sub.num_edges(); ++e) {
          if (static_cast<std::size_t>(sub.edges[e].tail) == v) acc += att(e, c);
        }
        EXPECT_NEAR(agg(v, c), acc, 1e-15);
      }
    }
    // The target head has no incoming edge in this subgraph unless one exists.
    bool head_has_in = false;
    for (const auto& e : sub.edges) head_has_in = head_has_in || e.tail == sub.target.head;
    if (!head_has_in) {
      for (std::size_t c = 0; c < 3; ++c) {
        EXPECT_EQ(agg(static_cast<std::size_t>(sub.target.head), c), 0.0);
      }
    }
  }
}

TEST(EdgeUpdate, AggregateIsHeadPlusRelationMinusTail) {
  std::mt19937_64 rng(7);
  const auto sub = model_check::find_subgraph(6, 2, 8);
  const auto inc = build_incidence(sub, 4);
  Matrix nodes(sub.num_nodes(), 3), rel(4, 3);
  fill(nodes, rng);
  fill(rel, rng);
  ad::Tape tape;
  const Matrix agg =
      model::edge_aggregate(tape.constant(nodes), tape.constant(rel), inc, true).value();
  const Matrix no_rel =
      model::edge_aggregate(tape.constant(nodes), tape.constant(rel), inc, false).value();
  for (std::size_t e = 0; e < sub.num_edges(); ++e) {
    const auto h = static_cast<std::size_t>(sub.edges[e].head);
    const auto t = static_cast<std::size_t>(sub.edges[e].tail);
    const auto r = static_cast<std::size_t>(sub.edges[e].relation);
    for (std::size_t c = 0; c < 3; ++c) {
      EXPECT_EQ(agg(e, c), nodes(h, c) + rel(r, c) - nodes(t, c));
      EXPECT_EQ(no_rel(e, c), nodes(h, c) - nodes(t, c));
    }
  }
}

TEST(EdgeUpdate, EvalModeIsDeterministic) {
  const auto sub = chain_subgraph();
  const auto inc = build_incidence(sub, 3);
  std::mt19937_64 rng(8);
  Matrix e(sub.num_edges(), 3), n(sub.num_nodes(), 3), rel(3, 3), w(3, 3);
  for (Matrix* m : {&e, &n, &rel, &w}) fill(*m, rng);
  ModelConfig cfg;
  ad::Tape tape;
  std::mt19937_64 r1(1), r2(2);
  const auto a = model::edge_update(tape.constant(e), tape.constant(e), tape.constant(n),
                                    tape.constant(rel), inc, tape.constant(w), cfg, false, r1);
  const auto b = model::edge_update(tape.constant(e), tape.constant(e), tape.constant(n),
                                    tape.constant(rel), inc, tape.constant(w), cfg, false, r2);
  EXPECT_EQ(a.value(), b.value());
}

TEST(Score, ZeroTranslationReducesToHeadBiases) {
  const auto sub = chain_subgraph();
  Model m(small_config(), 3, 1);
  ad::Tape tape;
  const BoundWeights w = m.bind(tape);
  // Identical head and tail rows and a zero relation row.
  const Tensor nodes = tape.constant(Matrix(sub.num_nodes(), 6, 0.3));
  const Tensor rel = tape.constant(Matrix(3, 6));
  const double s = model::score(nodes, rel, sub, w, Activation::Relu, Activation::Tanh).scalar();
  const auto& p = m.params();
  const Matrix& b1 = p[p.index_of("score.b1")].value;
  const Matrix& w2 = p[p.index_of("score.w2")].value;
  double expected = p[p.index_of("score.b2")].value.data[0];
  for (std::size_t j = 0; j < b1.size(); ++j) expected += std::max(b1.data[j], 0.0) * w2.data[j];
  EXPECT_DOUBLE_EQ(s, expected);
}

TEST(Forward, TwoIterationControlFlow) {
  ModelConfig cfg = small_config();
  cfg.iters = 2;
  Model m(cfg, 3, 2);
  ad::Tape tape;
  std::mt19937_64 rng(1);
  std::vector<std::string> trace;
  m.forward(tape, chain_subgraph(), false, rng, &trace);
  EXPECT_EQ(trace, (std::vector<std::string>{"project", "attention(k=1)", "node_update(k=1)",
                                             "edge_update(k=1)", "attention(k=2)",
                                             "node_update(k=2,last)", "score"}));
  cfg.edge_update = false;
  Model no_edge(cfg, 3, 2);
  ad::Tape t2;
  trace.clear();
  no_edge.forward(t2, chain_subgraph(), false, rng, &trace);
  EXPECT_EQ(std::count(trace.begin(), trace.end(), "edge_update(k=1)"), 0);
}

TEST(Forward, EvalScoresAreDeterministicAndEdgeOrderFree) {
  Model m(small_config(), 4, 3);
  auto sub = model_check::find_subgraph(6, 2, 21);
  const double a = m.score(sub);
  EXPECT_EQ(a, m.score(sub));
  std::reverse(sub.edges.begin(), sub.edges.end());
  EXPECT_EQ(a, m.score(sub));
  Subgraph empty;
  EXPECT_EQ(m.score(empty), kEmptySubgraphScore);
  Extraction failed;
  failed.status = ExtractStatus::EmptySubgraph;
  EXPECT_EQ(m.score(failed), kEmptySubgraphScore);
  ad::Tape tape;
  std::mt19937_64 rng(1);
  EXPECT_THROW(m.forward(tape, empty, false, rng), EmptySubgraphError);
  sub.target.relation = 9;
  ad::Tape t2;
  EXPECT_THROW(m.forward(t2, sub, false, rng), VocabularyError);
}

TEST(Forward, AllAblationsRun) {
  const auto sub = model_check::find_subgraph(5, 2, 31);
  for (const auto attention : {AttentionMode::Enhanced, AttentionMode::RelationOnly, AttentionMode::None}) {
    for (const bool edge_update : {true, false}) {
      for (const bool rel_in : {true, false}) {
        ModelConfig cfg = small_config();
        cfg.attention = attention;
        cfg.edge_update = edge_update;
        cfg.relation_in_edge_update = rel_in;
        Model m(cfg, 4, 5);
        EXPECT_TRUE(std::isfinite(m.score(sub)));
      }
    }
  }
}

TEST(Forward, RelabelingEntitiesChangesNoBit) {
  std::mt19937_64 rng(41);
  const Graph g = oracle::random_graph(30, 90, 3, rng);
  // Same structure, every entity renamed and moved to a larger id with
  // unrelated entities interleaved; relative order is kept.
  Vocabularies v;
  for (int i = 0; i < 30; ++i) {
    v.entities.intern("pad" + std::to_string(i));
    v.entities.intern("q" + std::to_string(i));
  }
  for (int r = 0; r < 3; ++r) v.relations.intern("r" + std::to_string(r));
  std::vector<Triplet> moved;
  for (const auto& t : g.triplets()) moved.push_back({2 * t.head + 1, t.relation, 2 * t.tail + 1});
  const Graph g2(moved, v);
  Model m(ModelConfig{}, 3, 7);
  int compared = 0;
  for (const auto& t : g.triplets()) {
    if (t.head == t.tail) continue;
    const auto a = extract_enclosing(g, t, {});
    const auto b = extract_enclosing(g2, {2 * t.head + 1, t.relation, 2 * t.tail + 1}, {});
    ASSERT_EQ(a.ok(), b.ok());
    if (!a.ok()) continue;
    EXPECT_EQ(a.subgraph.edges, b.subgraph.edges);
    EXPECT_EQ(a.subgraph.labels, b.subgraph.labels);
    const double sa = m.score(a), sb = m.score(b);
    EXPECT_EQ(std::memcmp(&sa, &sb, sizeof sa), 0);
    ++compared;
  }
  EXPECT_GT(compared, 20);
}

TEST(Parameters, CountMatchesClosedForm) {
  ModelConfig cfg;
  cfg.hop = 3;
  cfg.iters = 3;
  cfg.dim = 32;
  cfg.score_hidden = 16;
  // Closed form evaluated by tests/oracles/frozen_values.py.
  EXPECT_EQ(Model::parameter_count(cfg, 9), 23649u);
  EXPECT_EQ(Model(cfg, 9, 1).params().scalar_count(), 23649u);
}

TEST(Parameters, ConfigValidation) {
  ModelConfig cfg;
  cfg.iters = 1;
  EXPECT_THROW(Model(cfg, 3, 1), ConfigError);
  cfg = {};
  cfg.edge_dropout = 1.0;
  EXPECT_THROW(Model(cfg, 3, 1), ConfigError);
  EXPECT_THROW(Model(ModelConfig{}, 0, 1), ConfigError);
}

TEST(Gradients, EndToEndMatchesFiniteDifferences) {
  ModelConfig cfg = small_config();
  cfg.hop = 3;
  Model m(cfg, 4, 11);
  const auto pos = model_check::find_subgraph(5, 3, 51);
  const auto neg = model_check::find_subgraph(5, 3, 52);
  const auto errors = model_check::gradient_errors(m, pos, neg, 10.0, 3);
  ASSERT_EQ(errors.size(), m.params().size());
  for (const auto& e : errors) EXPECT_LE(e.error, 1e-3) << e.name;
}

TEST(Checkpoint, RoundTripPreservesScores) {
  testing_util::TempDir dir;
  ModelConfig cfg = small_config();
  cfg.attention = AttentionMode::RelationOnly;
  cfg.edge_dropout = 0.25;
  Model m(cfg, 4, 13);
  save_checkpoint(dir / "m.ckpt", m, {"a", "b", "c", "d"}, "dim=6\n");
  const Checkpoint c = load_checkpoint(dir / "m.ckpt");
  EXPECT_EQ(c.relation_names, (std::vector<std::string>{"a", "b", "c", "d"}));
  EXPECT_EQ(c.config_echo, "dim=6\n");
  EXPECT_EQ(c.config.attention, AttentionMode::RelationOnly);
  EXPECT_EQ(c.config.edge_dropout, 0.25);
  const Model back = model_from_checkpoint(c);
  for (std::size_t i = 0; i < m.params().size(); ++i) {
    EXPECT_EQ(back.params()[i].name, m.params()[i].name);
    EXPECT_EQ(back.params()[i].value, m.params()[i].value);
  }
  const auto sub = model_check::find_subgraph(5, 2, 61);
  EXPECT_EQ(back.score(sub), m.score(sub));

  const std::string bytes = testing_util::read_file(dir / "m.ckpt");
  testing_util::write_file(dir / "short.ckpt", bytes.substr(0, bytes.size() / 2));
  EXPECT_THROW(load_checkpoint(dir / "short.ckpt"), FormatError);
  testing_util::write_file(dir / "bad.ckpt", "XXXXXXXX" + bytes.substr(8));
  EXPECT_THROW(load_checkpoint(dir / "bad.ckpt"), FormatError);
  EXPECT_THROW(load_checkpoint(dir / "missing.ckpt"), IoError);
}

TEST(Checkpoint, AdoptingMismatchedParametersFails) {
  Model m(small_config(), 4, 1);
  ModelConfig other = small_config();
  other.dim = 7;
  EXPECT_THROW(Model(other, 4, m.params()), FormatError);
  EXPECT_THROW(Model(small_config(), 5, m.params()), FormatError);
}
