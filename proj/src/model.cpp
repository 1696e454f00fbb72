#include "sgr/model.hpp"

#include <algorithm>
#include <cmath>

#include "sgr/errors.hpp"

namespace sgr {

const char* to_string(Activation a) {
  switch (a) {
    case Activation::Relu: return "relu";
    case Activation::Tanh: return "tanh";
    case Activation::Sigmoid: return "sigmoid";
    case Activation::Identity: return "identity";
  }
  return "?";
}

const char* to_string(AttentionMode a) {
  switch (a) {
    case AttentionMode::Enhanced: return "enhanced";
    case AttentionMode::RelationOnly: return "relation";
    case AttentionMode::None: return "none";
  }
  return "?";
}

Activation parse_activation(const std::string& s) {
  if (s == "relu") return Activation::Relu;
  if (s == "tanh") return Activation::Tanh;
  if (s == "sigmoid") return Activation::Sigmoid;
  if (s == "identity") return Activation::Identity;
  throw ConfigError("unknown activation '" + s + "' (relu, tanh, sigmoid, identity)");
}

AttentionMode parse_attention(const std::string& s) {
  if (s == "enhanced") return AttentionMode::Enhanced;
  if (s == "relation") return AttentionMode::RelationOnly;
  if (s == "none") return AttentionMode::None;
  throw ConfigError("unknown attention mode '" + s + "' (enhanced, relation, none)");
}

void ModelConfig::validate() const {
  if (hop < 1) throw ConfigError("hop must be >= 1");
  if (iters < 2) throw ConfigError("iters must be >= 2");
  if (dim < 1) throw ConfigError("dim must be >= 1");
  if (score_hidden < 1) throw ConfigError("score_hidden must be >= 1");
  if (!(edge_dropout >= 0.0 && edge_dropout < 1.0)) {
    throw ConfigError("edge_dropout must be in [0, 1)");
  }
}

namespace model {

using ad::Tensor;

Tensor activate(Activation a, const Tensor& x) {
  switch (a) {
    case Activation::Relu: return ad::relu(x);
    case Activation::Tanh: return ad::tanh(x);
    case Activation::Sigmoid: return ad::sigmoid(x);
    case Activation::Identity: return x;
  }
  return x;
}

Matrix init_node_embeddings(const Subgraph& sub, int hop) {
  const auto width = static_cast<std::size_t>(hop + 2);
  Matrix out(sub.num_nodes(), 2 * width);
  for (std::size_t i = 0; i < sub.num_nodes(); ++i) {
    const auto& l = sub.labels[i];
    if (l.from_head < 0 || l.from_head > hop + 1 || l.to_tail < 0 || l.to_tail > hop + 1) {
      throw DimensionError("node label (" + std::to_string(l.from_head) + "," +
                           std::to_string(l.to_tail) + ") outside [0, " + std::to_string(hop + 1) +
                           "]");
    }
    out(i, static_cast<std::size_t>(l.from_head)) = 1.0;
    out(i, width + static_cast<std::size_t>(l.to_tail)) = 1.0;
  }
  return out;
}

namespace {

struct EdgeIndex {
  std::vector<int> heads, relations, tails;
};

EdgeIndex edge_index(const Subgraph& sub) {
  EdgeIndex idx;
  for (const auto& e : sub.edges) {
    idx.heads.push_back(e.head);
    idx.relations.push_back(e.relation);
    idx.tails.push_back(e.tail);
  }
  return idx;
}

// N[head] + R[rel] - N[tail] for one triplet, as a 1 x d row.
Tensor target_translation(const Tensor& nodes, const Tensor& relations, const Subgraph& sub) {
  const int h[1] = {sub.target.head};
  const int r[1] = {sub.target.relation};
  const int t[1] = {sub.target.tail};
  return ad::sub(ad::add(ad::row_select(nodes, h), ad::row_select(relations, r)),
                 ad::row_select(nodes, t));
}

}  // namespace

Tensor init_edge_embeddings(const Subgraph& sub, const Tensor& node_init, const Tensor& relations) {
  const auto idx = edge_index(sub);
  const Tensor parts[3] = {ad::row_select(node_init, idx.heads),
                           ad::row_select(relations, idx.relations),
                           ad::row_select(node_init, idx.tails)};
  return ad::concat_cols(parts);
}

Projected project(const Tensor& node_init, const Tensor& edge_init, const Tensor& node_proj,
                  const Tensor& edge_proj, Activation f1) {
  return {activate(f1, ad::matmul(node_init, node_proj)),
          activate(f1, ad::matmul(edge_init, edge_proj))};
}

Tensor sparse_matmul(const IncidenceMatrix& a, const Tensor& x) {
  if (static_cast<std::size_t>(a.cols()) != x.rows()) {
    throw DimensionError("sparse_matmul: incidence has " + std::to_string(a.cols()) +
                         " columns, operand has " + std::to_string(x.rows()) + " rows");
  }
  return ad::scatter_add_rows(x, a.row_of_column, static_cast<std::size_t>(a.rows));
}

Tensor sparse_matmul_transposed(const IncidenceMatrix& a, const Tensor& x) {
  if (static_cast<std::size_t>(a.rows) != x.rows()) {
    throw DimensionError("sparse_matmul_transposed: incidence has " + std::to_string(a.rows) +
                         " rows, operand has " + std::to_string(x.rows()));
  }
  return ad::row_select(x, a.row_of_column);
}

Attention edge_attention(const Tensor& nodes, const Tensor& edges, const Tensor& relations,
                         const Subgraph& sub, const Incidence& inc, const Tensor& attn_hidden,
                         const Tensor& attn_out, Activation f1, AttentionMode mode) {
  ad::Tape& tape = *nodes.tape();
  const std::size_t n_edges = edges.rows();
  if (mode == AttentionMode::None) {
    return {edges, tape.constant(Matrix(n_edges, 1, 1.0))};
  }
  const Tensor per_edge =
      ad::sub(ad::add(sparse_matmul_transposed(inc.head_to_edge, nodes),
                      sparse_matmul_transposed(inc.rel_to_edge, relations)),
              sparse_matmul_transposed(inc.tail_to_edge, nodes));
  Tensor context;
  if (mode == AttentionMode::Enhanced) {
    context = target_translation(nodes, relations, sub);
  } else {
    const int r[1] = {sub.target.relation};
    context = ad::row_select(relations, r);
  }
  const std::vector<int> repeat(n_edges, 0);
  const Tensor joined[2] = {per_edge, ad::row_select(context, repeat)};
  const Tensor weights = ad::sigmoid(
      ad::matmul(activate(f1, ad::matmul(ad::concat_cols(joined), attn_hidden)), attn_out));
  return {ad::scale_rows(edges, weights), weights};
}

Tensor aggregate_incoming(const Tensor& attended, const Incidence& inc) {
  return sparse_matmul(inc.tail_to_edge, attended);
}

Tensor node_update(const Tensor& nodes_prev, const Tensor& attended, const Incidence& inc,
                   const Tensor& weight, Activation f1) {
  return activate(f1, ad::matmul(ad::add(aggregate_incoming(attended, inc), nodes_prev), weight));
}

Tensor final_node_update(const Tensor& nodes_prev, const Tensor& nodes0, const Tensor& attended,
                         const Incidence& inc, const BoundWeights& w, Activation f1) {
  const Tensor parts[3] = {aggregate_incoming(attended, inc), nodes_prev, nodes0};
  const Tensor hidden =
      activate(f1, ad::add_bias(ad::matmul(ad::concat_cols(parts), w.comm_w1), w.comm_b1));
  const Tensor communicated = ad::add_bias(ad::matmul(hidden, w.comm_w2), w.comm_b2);
  return ad::gru_sequence(communicated, w.gru);
}

Tensor edge_aggregate(const Tensor& nodes, const Tensor& relations, const Incidence& inc,
                      bool with_relation) {
  Tensor acc = sparse_matmul_transposed(inc.head_to_edge, nodes);
  if (with_relation) acc = ad::add(acc, sparse_matmul_transposed(inc.rel_to_edge, relations));
  return ad::sub(acc, sparse_matmul_transposed(inc.tail_to_edge, nodes));
}

Tensor edge_update(const Tensor& edges_prev, const Tensor& edges0, const Tensor& nodes,
                   const Tensor& relations, const Incidence& inc, const Tensor& weight,
                   const ModelConfig& cfg, bool train, std::mt19937_64& rng) {
  const Tensor agg = edge_aggregate(nodes, relations, inc, cfg.relation_in_edge_update);
  const Tensor mixed = activate(cfg.f1, ad::add(edges_prev, activate(cfg.f2, agg)));
  const Tensor updated = activate(cfg.f1, ad::add(ad::matmul(mixed, weight), edges0));
  return ad::dropout(updated, cfg.edge_dropout, train, rng);
}

Tensor score(const Tensor& nodes, const Tensor& relations, const Subgraph& sub,
             const BoundWeights& w, Activation f1, Activation f2) {
  const Tensor s = activate(f2, target_translation(nodes, relations, sub));
  const Tensor hidden = activate(f1, ad::add_bias(ad::matmul(s, w.score_w1), w.score_b1));
  return ad::add_bias(ad::matmul(hidden, w.score_w2), w.score_b2);
}

}  // namespace model

ParameterSet Model::layout(const ModelConfig& cfg, int num_relations) {
  const auto d = static_cast<std::size_t>(cfg.dim);
  const auto l = cfg.iters;
  ParameterSet p;
  p.add("relation_emb", static_cast<std::size_t>(num_relations), d);
  p.add("node_proj", static_cast<std::size_t>(cfg.label_width()), d);
  p.add("edge_proj", static_cast<std::size_t>(cfg.edge_input_width()), d);
  for (int k = 1; k < l; ++k) p.add("node_iter." + std::to_string(k), d, d);
  for (int k = 1; k < l; ++k) p.add("edge_iter." + std::to_string(k), d, d);
  for (int k = 0; k < l; ++k) {
    p.add("attn_hidden." + std::to_string(k), 2 * d, d);
    p.add("attn_out." + std::to_string(k), d, 1);
  }
  p.add("comm.w1", 3 * d, d);
  p.add("comm.b1", 1, d);
  p.add("comm.w2", d, d);
  p.add("comm.b2", 1, d);
  p.add("gru.w_ih", d, 3 * d);
  p.add("gru.w_hh", d, 3 * d);
  p.add("gru.b_ih", 1, 3 * d);
  p.add("gru.b_hh", 1, 3 * d);
  const auto sh = static_cast<std::size_t>(cfg.score_hidden);
  p.add("score.w1", d, sh);
  p.add("score.b1", 1, sh);
  p.add("score.w2", sh, 1);
  p.add("score.b2", 1, 1);
  return p;
}

Model::Model(const ModelConfig& cfg, int num_relations, std::uint64_t seed)
    : cfg_(cfg), num_relations_(num_relations) {
  cfg_.validate();
  if (num_relations < 1) throw ConfigError("model needs at least one relation");
  params_ = layout(cfg_, num_relations);
  std::mt19937_64 rng(seed);
  for (auto& p : params_) {
    const bool bias = p.name.find(".b") != std::string::npos;
    if (bias) continue;
    if (p.name == "relation_emb") {
      std::normal_distribution<double> dist(0.0, 1.0 / std::sqrt(static_cast<double>(cfg_.dim)));
      for (double& v : p.value.data) v = dist(rng);
      continue;
    }
    const double bound =
        std::sqrt(6.0 / static_cast<double>(p.value.rows + p.value.cols));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (double& v : p.value.data) v = dist(rng);
  }
}

Model::Model(const ModelConfig& cfg, int num_relations, ParameterSet params)
    : cfg_(cfg), num_relations_(num_relations) {
  cfg_.validate();
  const auto expected = layout(cfg_, num_relations);
  if (expected.size() != params.size()) {
    throw FormatError("parameter count " + std::to_string(params.size()) + " does not match layout " +
                      std::to_string(expected.size()));
  }
  for (std::size_t i = 0; i < expected.size(); ++i) {
    if (expected[i].name != params[i].name || !expected[i].value.same_shape(params[i].value)) {
      throw FormatError("parameter '" + params[i].name + "' does not match layout entry '" +
                        expected[i].name + "'");
    }
  }
  params_ = std::move(params);
  params_.zero_grad();
}

BoundWeights Model::bind(ad::Tape& tape) const {
  std::size_t next = 0;
  auto take = [&]() { return tape.parameter(params_, next++); };
  BoundWeights w;
  w.relations = take();
  w.node_proj = take();
  w.edge_proj = take();
  for (int k = 1; k < cfg_.iters; ++k) w.node_iter.push_back(take());
  for (int k = 1; k < cfg_.iters; ++k) w.edge_iter.push_back(take());
  for (int k = 0; k < cfg_.iters; ++k) {
    w.attn_hidden.push_back(take());
    w.attn_out.push_back(take());
  }
  w.comm_w1 = take();
  w.comm_b1 = take();
  w.comm_w2 = take();
  w.comm_b2 = take();
  w.gru.w_ih = take();
  w.gru.w_hh = take();
  w.gru.b_ih = take();
  w.gru.b_hh = take();
  w.score_w1 = take();
  w.score_b1 = take();
  w.score_w2 = take();
  w.score_b2 = take();
  return w;
}

ad::Tensor Model::forward(ad::Tape& tape, const Subgraph& sub, bool train, std::mt19937_64& rng,
                          std::vector<std::string>* trace) const {
  if (sub.edges.empty()) throw EmptySubgraphError("forward() on a subgraph without edges");
  if (sub.target.relation < 0 || sub.target.relation >= num_relations_) {
    throw VocabularyError("target relation id " + std::to_string(sub.target.relation) +
                          " outside the model's relation table");
  }
  // Aggregations sum in edge order; a canonical order makes the result
  // independent of how the caller listed the edges.
  Subgraph canonical;
  const Subgraph* s = &sub;
  if (!std::is_sorted(sub.edges.begin(), sub.edges.end())) {
    canonical = sub;
    std::sort(canonical.edges.begin(), canonical.edges.end());
    s = &canonical;
  }
  auto note = [trace](std::string stage) {
    if (trace != nullptr) trace->push_back(std::move(stage));
  };

  const Incidence inc = build_incidence(*s, num_relations_);
  const BoundWeights w = bind(tape);
  const ad::Tensor node_init = tape.constant(model::init_node_embeddings(*s, cfg_.hop));
  const ad::Tensor edge_init = model::init_edge_embeddings(*s, node_init, w.relations);
  const auto proj = model::project(node_init, edge_init, w.node_proj, w.edge_proj, cfg_.f1);
  note("project");

  ad::Tensor nodes = proj.nodes;
  ad::Tensor edges = proj.edges;
  const int l = cfg_.iters;
  for (int k = 1; k <= l; ++k) {
    const auto ks = std::to_string(k);
    const auto att = model::edge_attention(nodes, edges, w.relations, *s, inc,
                                           w.attn_hidden[static_cast<std::size_t>(k - 1)],
                                           w.attn_out[static_cast<std::size_t>(k - 1)], cfg_.f1,
                                           cfg_.attention);
    note("attention(k=" + ks + ")");
    if (k < l) {
      nodes = model::node_update(nodes, att.attended, inc,
                                 w.node_iter[static_cast<std::size_t>(k - 1)], cfg_.f1);
      note("node_update(k=" + ks + ")");
      if (cfg_.edge_update) {
        edges = model::edge_update(edges, proj.edges, nodes, w.relations, inc,
                                   w.edge_iter[static_cast<std::size_t>(k - 1)], cfg_, train, rng);
        note("edge_update(k=" + ks + ")");
      }
    } else {
      nodes = model::final_node_update(nodes, proj.nodes, att.attended, inc, w, cfg_.f1);
      note("node_update(k=" + ks + ",last)");
    }
  }
  const auto out = model::score(nodes, w.relations, *s, w, cfg_.f1, cfg_.f2);
  note("score");
  return out;
}

double Model::score(const Subgraph& sub) const {
  if (sub.edges.empty()) return kEmptySubgraphScore;
  ad::Tape tape;
  std::mt19937_64 unused(0);
  return forward(tape, sub, false, unused).scalar();
}

double Model::score(const Extraction& ex) const {
  return ex.ok() ? score(ex.subgraph) : kEmptySubgraphScore;
}

std::size_t Model::parameter_count(const ModelConfig& cfg, int num_relations) {
  return layout(cfg, num_relations).scalar_count();
}

}  // namespace sgr
