#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "sgr/autodiff.hpp"
#include "sgr/subgraph.hpp"

namespace sgr {

enum class Activation { Relu, Tanh, Sigmoid, Identity };
enum class AttentionMode { Enhanced, RelationOnly, None };

const char* to_string(Activation a);
const char* to_string(AttentionMode a);
Activation parse_activation(const std::string& s);
AttentionMode parse_attention(const std::string& s);

// Score assigned to a candidate without an enclosing subgraph.
inline constexpr double kEmptySubgraphScore = -1e4;

struct ModelConfig {
  int hop = 3;
  int iters = 3;
  int dim = 32;
  Activation f1 = Activation::Relu;
  Activation f2 = Activation::Tanh;
  double edge_dropout = 0.5;
  int score_hidden = 16;
  AttentionMode attention = AttentionMode::Enhanced;
  bool edge_update = true;
  bool relation_in_edge_update = true;

  void validate() const;
  int label_width() const { return 2 * (hop + 2); }
  int edge_input_width() const { return 4 * (hop + 2) + dim; }
};

// Learnable tensors bound onto one tape.
struct BoundWeights {
  ad::Tensor relations;     // N_r x d
  ad::Tensor node_proj;     // 2(h+2) x d
  ad::Tensor edge_proj;     // (4(h+2)+d) x d
  std::vector<ad::Tensor> node_iter;  // [k-1] for k = 1..l-1, d x d
  std::vector<ad::Tensor> edge_iter;  // [k-1] for k = 1..l-1, d x d
  std::vector<ad::Tensor> attn_hidden;  // [k] for k = 0..l-1, 2d x d
  std::vector<ad::Tensor> attn_out;     // [k] for k = 0..l-1, d x 1
  ad::Tensor comm_w1, comm_b1, comm_w2, comm_b2;  // 3d -> d -> d
  ad::GruWeights gru;
  ad::Tensor score_w1, score_b1, score_w2, score_b2;  // d -> hidden -> 1
};

// Building blocks of the forward pass, exposed for testing.
namespace model {

ad::Tensor activate(Activation a, const ad::Tensor& x);

// Row i = one-hot(from_head) ++ one-hot(to_tail), each of width hop + 2.
Matrix init_node_embeddings(const Subgraph& sub, int hop);

// Row per edge = node_init[head] ++ relations[relation] ++ node_init[tail].
ad::Tensor init_edge_embeddings(const Subgraph& sub, const ad::Tensor& node_init,
                                const ad::Tensor& relations);

struct Projected {
  ad::Tensor nodes;  // N^0
  ad::Tensor edges;  // E^0
};
Projected project(const ad::Tensor& node_init, const ad::Tensor& edge_init,
                  const ad::Tensor& node_proj, const ad::Tensor& edge_proj, Activation f1);

// A * x for a 0/1 incidence matrix, and A^T * x.
ad::Tensor sparse_matmul(const IncidenceMatrix& a, const ad::Tensor& x);
ad::Tensor sparse_matmul_transposed(const IncidenceMatrix& a, const ad::Tensor& x);

struct Attention {
  ad::Tensor attended;  // row i = weight_i * E_i
  ad::Tensor weights;   // N_e x 1, in (0, 1)
};
// Edge attention driven by each edge's translation vector (N_h + R_r - N_t)
// concatenated with the target triplet's.
Attention edge_attention(const ad::Tensor& nodes, const ad::Tensor& edges,
                         const ad::Tensor& relations, const Subgraph& sub,
                         const Incidence& inc, const ad::Tensor& attn_hidden,
                         const ad::Tensor& attn_out, Activation f1, AttentionMode mode);

// Sum of attended embeddings of the edges each node is the tail of.
ad::Tensor aggregate_incoming(const ad::Tensor& attended, const Incidence& inc);

// Intermediate iteration: f1((agg + N_prev) W).
ad::Tensor node_update(const ad::Tensor& nodes_prev, const ad::Tensor& attended,
                       const Incidence& inc, const ad::Tensor& weight, Activation f1);

// Last iteration: two-layer MLP over agg ++ N_prev ++ N^0, then a GRU scan
// over nodes in stored order.
ad::Tensor final_node_update(const ad::Tensor& nodes_prev, const ad::Tensor& nodes0,
                             const ad::Tensor& attended, const Incidence& inc,
                             const BoundWeights& w, Activation f1);

// head^T N + rel^T R - tail^T N (relation term optional).
ad::Tensor edge_aggregate(const ad::Tensor& nodes, const ad::Tensor& relations,
                          const Incidence& inc, bool with_relation);

ad::Tensor edge_update(const ad::Tensor& edges_prev, const ad::Tensor& edges0,
                       const ad::Tensor& nodes, const ad::Tensor& relations,
                       const Incidence& inc, const ad::Tensor& weight, const ModelConfig& cfg,
                       bool train, std::mt19937_64& rng);

// f2(N_head + R_target - N_tail) through d -> hidden -> 1.
ad::Tensor score(const ad::Tensor& nodes, const ad::Tensor& relations, const Subgraph& sub,
                 const BoundWeights& w, Activation f1, Activation f2);

}  // namespace model

class Model {
 public:
  Model(const ModelConfig& cfg, int num_relations, std::uint64_t seed);
  // Adopts existing parameters; names and shapes must match the layout.
  Model(const ModelConfig& cfg, int num_relations, ParameterSet params);

  const ModelConfig& config() const noexcept { return cfg_; }
  int num_relations() const noexcept { return num_relations_; }
  ParameterSet& params() noexcept { return params_; }
  const ParameterSet& params() const noexcept { return params_; }

  BoundWeights bind(ad::Tape& tape) const;

  // Full forward pass returning a 1x1 score. `trace`, when given, receives
  // one entry per stage in execution order.
  ad::Tensor forward(ad::Tape& tape, const Subgraph& sub, bool train, std::mt19937_64& rng,
                     std::vector<std::string>* trace = nullptr) const;

  // Eval-mode score; kEmptySubgraphScore for an empty subgraph.
  double score(const Subgraph& sub) const;
  double score(const Extraction& ex) const;

  static std::size_t parameter_count(const ModelConfig& cfg, int num_relations);

 private:
  static ParameterSet layout(const ModelConfig& cfg, int num_relations);

  ModelConfig cfg_;
  int num_relations_ = 0;
  ParameterSet params_;
};

}  // namespace sgr
