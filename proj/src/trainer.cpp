#include "sgr/trainer.hpp"

#include <omp.h>

#include <algorithm>
#include <chrono>
#include <ctime>
#include <exception>
#include <limits>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>

#include "sgr/errors.hpp"
#include "sgr/metrics.hpp"
#include "sgr/optim.hpp"
#include "sgr/sampling.hpp"
#include "sgr/text.hpp"

namespace sgr {
namespace {

// Seed streams, kept distinct so adding draws in one place never shifts
// another.
constexpr std::uint64_t kStageValid = 1;
constexpr std::uint64_t kStageNegatives = 2;
constexpr std::uint64_t kStageDropout = 3;

int threads_for(int workers) { return workers > 0 ? workers : omp_get_max_threads(); }

std::string timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void rethrow_first(const std::vector<std::exception_ptr>& errors) {
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

struct Candidate {
  Triplet triplet;
  Extraction extraction;
};

// Draws `count` negatives for `pos`; falls back to unconstrained corruption
// when the subgraph requirement exhausts the retry budget.
std::vector<Triplet> draw_negatives(const Graph& g, const Triplet& pos, int count,
                                    const SamplingOptions& opts, std::mt19937_64& rng,
                                    std::size_t& unconstrained) {
  std::vector<Triplet> out;
  for (int j = 0; j < count; ++j) {
    const auto mode = pick_replace_mode(NegativeMode::Mix, rng);
    auto neg = sample_negative(g, pos, mode, opts, rng);
    if (!neg && opts.require_subgraph) {
      SamplingOptions loose = opts;
      loose.require_subgraph = false;
      neg = sample_negative(g, pos, mode, loose, rng);
      if (neg) ++unconstrained;
    }
    if (neg) out.push_back(*neg);
  }
  return out;
}

std::vector<double> score_all(const Model& model, std::span<const Extraction> ex, int threads) {
  std::vector<double> scores(ex.size());
  std::vector<std::exception_ptr> errors(ex.size());
  const auto n = static_cast<std::ptrdiff_t>(ex.size());
#pragma omp parallel for schedule(dynamic, 4) num_threads(threads)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    try {
      scores[k] = model.score(ex[k]);
    } catch (...) {
      errors[k] = std::current_exception();
    }
  }
  rethrow_first(errors);
  return scores;
}

}  // namespace

void TrainConfig::validate() const {
  if (!(lr > 0.0)) throw ConfigError("lr must be > 0");
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (batch_size < 1) throw ConfigError("batch size must be >= 1");
  if (!(margin > 0.0)) throw ConfigError("margin must be > 0");
  if (negatives_per_positive < 1) throw ConfigError("negatives per positive must be >= 1");
  if (patience < 1) throw ConfigError("patience must be >= 1");
  if (!(clip_norm > 0.0)) throw ConfigError("clip norm must be > 0");
  if (max_nodes < 2) throw ConfigError("max_nodes must be >= 2");
  if (max_retries < 1) throw ConfigError("max_retries must be >= 1");
  if (workers < 0) throw ConfigError("workers must be >= 0");
}

std::string TrainConfig::echo() const {
  std::ostringstream s;
  s << "lr=" << exact(lr) << " epochs=" << epochs << " batch=" << batch_size
    << " margin=" << exact(margin) << " neg=" << negatives_per_positive << " seed=" << seed
    << " patience=" << patience << " require_subgraph=" << require_subgraph
    << " clip_norm=" << exact(clip_norm) << " undirected=" << force_undirected
    << " max_nodes=" << max_nodes;
  return s.str();
}

ad::Tensor margin_loss(const ad::Tensor& pos, std::span<const ad::Tensor> negs, double margin) {
  if (negs.empty()) throw ConfigError("margin loss needs at least one negative");
  if (!(margin > 0.0)) throw ConfigError("margin must be > 0");
  std::optional<ad::Tensor> total;
  for (const auto& neg : negs) {
    auto term = ad::relu(ad::add_scalar(ad::sub(neg, pos), margin));
    total = total ? ad::add(*total, term) : term;
  }
  return ad::scale(*total, 1.0 / static_cast<double>(negs.size()));
}

double margin_loss(double pos, std::span<const double> negs, double margin) {
  if (negs.empty()) throw ConfigError("margin loss needs at least one negative");
  if (!(margin > 0.0)) throw ConfigError("margin must be > 0");
  double total = 0.0;
  for (const double neg : negs) total += std::max(0.0, (neg - pos) + margin);
  return total * (1.0 / static_cast<double>(negs.size()));
}

ValidationSet make_validation_set(const Graph& g, std::span<const Triplet> valid,
                                  const ModelConfig& model_cfg, const TrainConfig& cfg) {
  const ExtractOptions xopts{model_cfg.hop, cfg.max_nodes};
  const SamplingOptions sopts{cfg.require_subgraph, cfg.max_retries, xopts};
  ValidationSet set;
  for (std::size_t i = 0; i < valid.size(); ++i) {
    if (valid[i].head == valid[i].tail) continue;
    std::mt19937_64 rng(derive_seed(cfg.seed, kStageValid, i));
    const auto mode = pick_replace_mode(NegativeMode::Mix, rng);
    auto neg = sample_negative(g, valid[i], mode, sopts, rng);
    if (!neg) continue;
    set.candidates.push_back(valid[i]);
    set.positive.push_back(true);
    set.candidates.push_back(*neg);
    set.positive.push_back(false);
  }
  set.extractions = extract_batch(g, set.candidates, xopts, cfg.force_undirected);
  return set;
}

double validation_auc_pr(const Model& model, const ValidationSet& set, int workers) {
  const auto scores = score_all(model, set.extractions, threads_for(workers));
  std::vector<LabeledScore> labeled(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) labeled[i] = {scores[i], set.positive[i]};
  return auc_pr(labeled);
}

TrainResult train(const Graph& g, std::span<const Triplet> valid, const ModelConfig& model_cfg,
                  const TrainConfig& cfg, std::ostream* progress) {
  cfg.validate();
  model_cfg.validate();
  const int threads = threads_for(cfg.workers);
  ExtractOptions xopts{model_cfg.hop, cfg.max_nodes};
  SamplingOptions sopts{cfg.require_subgraph, cfg.max_retries, xopts};

  std::vector<std::string> log;
  auto emit = [&](std::string line) {
    if (cfg.log_timestamps) line = "time=" + timestamp() + " " + line;
    if (progress != nullptr) *progress << line << '\n' << std::flush;
    log.push_back(std::move(line));
  };
  emit("train " + cfg.echo() + " entities=" + std::to_string(g.num_entities()) +
       " relations=" + std::to_string(g.num_relations()) +
       " triplets=" + std::to_string(g.num_triplets()));

  // Positives: every fact with an enclosing subgraph once its edge is hidden.
  std::vector<Triplet> candidates;
  for (const auto& t : g.triplets()) {
    if (t.head != t.tail) candidates.push_back(t);
  }
  auto extracted = extract_batch(g, candidates, xopts, cfg.force_undirected);
  std::vector<Candidate> positives;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (extracted[i].ok()) positives.push_back({candidates[i], std::move(extracted[i])});
  }
  const std::size_t skipped = g.num_triplets() - positives.size();
  if (positives.empty()) throw ConfigError("no training triplet has an enclosing subgraph");

  const auto vset = make_validation_set(g, valid, model_cfg, cfg);
  const bool has_valid = !vset.candidates.empty();

  Model model(model_cfg, g.num_relations(), cfg.seed);
  ParameterSet& params = model.params();
  AdamState adam(params, cfg.lr);
  std::mt19937_64 shuffle_rng(cfg.seed);

  ParameterSet best = params;
  int best_epoch = 0;
  double best_auc = -std::numeric_limits<double>::infinity();
  std::size_t unconstrained = 0;
  int epochs_run = 0;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    epochs_run = epoch;
    std::vector<std::size_t> order(positives.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::shuffle(order.begin(), order.end(), shuffle_rng);

    // Negatives for this epoch, one independent stream per positive.
    std::vector<std::vector<Triplet>> negs(order.size());
    std::vector<std::size_t> fallback_counts(order.size(), 0);
    {
      std::vector<std::exception_ptr> errors(order.size());
      const auto n = static_cast<std::ptrdiff_t>(order.size());
#pragma omp parallel for schedule(dynamic, 4) num_threads(threads)
      for (std::ptrdiff_t i = 0; i < n; ++i) {
        const auto k = static_cast<std::size_t>(i);
        try {
          std::mt19937_64 rng(derive_seed(cfg.seed, kStageNegatives,
                                          static_cast<std::uint64_t>(epoch) << 32 | order[k]));
          negs[k] = draw_negatives(g, positives[order[k]].triplet, cfg.negatives_per_positive,
                                   sopts, rng, fallback_counts[k]);
        } catch (...) {
          errors[k] = std::current_exception();
        }
      }
      rethrow_first(errors);
    }
    for (const auto c : fallback_counts) unconstrained += c;

    double epoch_loss = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      std::size_t live = 0;
      for (std::size_t k = start; k < end; ++k) live += negs[k].empty() ? 0 : 1;
      if (live == 0) continue;
      const double inv_live = 1.0 / static_cast<double>(live);

      const std::size_t count = end - start;
      std::vector<std::vector<Matrix>> grads(count);
      std::vector<double> losses(count, 0.0);
      std::vector<std::exception_ptr> errors(count);
      const auto n = static_cast<std::ptrdiff_t>(count);
#pragma omp parallel for schedule(dynamic, 1) num_threads(threads)
      for (std::ptrdiff_t i = 0; i < n; ++i) {
        const auto b = static_cast<std::size_t>(i);
        const std::size_t k = start + b;
        try {
          if (negs[k].empty()) continue;
          std::mt19937_64 rng(derive_seed(cfg.seed, kStageDropout,
                                          static_cast<std::uint64_t>(epoch) << 32 | order[k]));
          ad::Tape tape;
          const auto pos = model.forward(tape, positives[order[k]].extraction.subgraph, true, rng);
          const auto neg_ex = extract_batch_serial(g, negs[k], xopts, cfg.force_undirected);
          std::vector<ad::Tensor> neg_scores;
          for (const auto& ex : neg_ex) {
            if (ex.ok()) {
              neg_scores.push_back(model.forward(tape, ex.subgraph, true, rng));
            } else {
              neg_scores.push_back(tape.constant(Matrix(1, 1, {kEmptySubgraphScore})));
            }
          }
          const auto loss = ad::scale(margin_loss(pos, neg_scores, cfg.margin), inv_live);
          losses[b] = loss.scalar();
          grads[b] = params.gradient_buffers();
          tape.backward(loss, grads[b]);
        } catch (...) {
          errors[b] = std::current_exception();
        }
      }
      rethrow_first(errors);

      params.zero_grad();
      double batch_loss = 0.0;
      for (std::size_t b = 0; b < count; ++b) {
        if (grads[b].empty()) continue;
        params.accumulate(grads[b]);
        batch_loss += losses[b];
      }
      clip_grad_norm(params, cfg.clip_norm);
      adam_step(params, adam);
      epoch_loss += batch_loss;
      ++batches;
      emit("epoch=" + std::to_string(epoch) + " batch=" + std::to_string(batches) +
           " loss=" + exact(batch_loss));
    }
    const double mean_loss = batches > 0 ? epoch_loss / static_cast<double>(batches) : 0.0;

    if (!has_valid) {
      emit("epoch=" + std::to_string(epoch) + " mean_loss=" + exact(mean_loss));
      best = params;
      best_epoch = epoch;
      continue;
    }
    const double auc = validation_auc_pr(model, vset, cfg.workers);
    if (auc > best_auc) {
      best_auc = auc;
      best_epoch = epoch;
      best = params;
    }
    emit("epoch=" + std::to_string(epoch) + " mean_loss=" + exact(mean_loss) +
         " valid_auc_pr=" + exact(auc) + " best_epoch=" + std::to_string(best_epoch));
    if (epoch - best_epoch >= cfg.patience) {
      emit("early_stop epoch=" + std::to_string(epoch));
      break;
    }
  }
  emit("done epochs=" + std::to_string(epochs_run) + " best_epoch=" + std::to_string(best_epoch) +
       " positives=" + std::to_string(positives.size()) + " skipped=" + std::to_string(skipped) +
       " unconstrained_negatives=" + std::to_string(unconstrained));

  TrainResult result(Model(model_cfg, g.num_relations(), std::move(best)));
  result.log = std::move(log);
  result.best_epoch = best_epoch;
  result.best_valid_auc_pr = has_valid ? best_auc : 0.0;
  result.epochs_run = epochs_run;
  result.positives_used = positives.size();
  result.positives_skipped = skipped;
  result.negatives_unconstrained = unconstrained;
  return result;
}

}  // namespace sgr
