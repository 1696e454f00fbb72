#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "sgr/autodiff.hpp"
#include "sgr/model.hpp"

namespace sgr {

struct TrainConfig {
  double lr = 0.001;
  int epochs = 50;
  int batch_size = 16;
  double margin = 10.0;
  int negatives_per_positive = 1;
  std::uint64_t seed = 1;
  // Epochs without a validation improvement before stopping.
  int patience = 10;
  // Resample negatives until they have an enclosing subgraph.
  bool require_subgraph = true;
  double clip_norm = 10.0;
  bool force_undirected = false;
  int max_nodes = 500;
  int max_retries = 200;
  // Wall-clock stamps make logs differ between runs, so they are opt-in.
  bool log_timestamps = false;
  // OpenMP threads; 0 keeps the runtime default.
  int workers = 0;

  void validate() const;
  std::string echo() const;
};

struct TrainResult {
  explicit TrainResult(Model m) : model(std::move(m)) {}

  Model model;  // parameters of the best validation epoch (last epoch without validation)
  std::vector<std::string> log;
  int best_epoch = 0;
  double best_valid_auc_pr = 0.0;
  int epochs_run = 0;
  std::size_t positives_used = 0;
  std::size_t positives_skipped = 0;  // no enclosing subgraph
  std::size_t negatives_unconstrained = 0;  // fell back to plain corruption
};

// Mean over negatives of max(0, margin - pos + neg).
ad::Tensor margin_loss(const ad::Tensor& pos, std::span<const ad::Tensor> negs, double margin);
double margin_loss(double pos, std::span<const double> negs, double margin);

// Fixed validation candidates: each valid triplet plus one corrupted copy
// (head or tail at random), drawn from seed-derived streams.
struct ValidationSet {
  std::vector<Triplet> candidates;
  std::vector<bool> positive;
  std::vector<Extraction> extractions;
};

ValidationSet make_validation_set(const Graph& g, std::span<const Triplet> valid,
                                  const ModelConfig& model_cfg, const TrainConfig& cfg);
double validation_auc_pr(const Model& model, const ValidationSet& set, int workers = 0);

// Trains on every triplet of `g` as a positive (its own edge hidden during
// extraction). Each batch minimizes the mean per-positive hinge loss with
// Adam. Log lines are `key=value` records: one per batch (epoch, batch,
// loss) and one per epoch (mean loss, validation AUC-PR). Results depend
// only on the seeds, not on the worker count. `progress`, when given,
// receives each log line as it is made.
TrainResult train(const Graph& g, std::span<const Triplet> valid, const ModelConfig& model_cfg,
                  const TrainConfig& cfg, std::ostream* progress = nullptr);

}  // namespace sgr
