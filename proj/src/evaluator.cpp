#include "sgr/evaluator.hpp"

#include <omp.h>

#include <algorithm>
#include <exception>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "sgr/errors.hpp"
#include "sgr/metrics.hpp"
#include "sgr/text.hpp"

namespace sgr {
namespace {

void rethrow_first(const std::vector<std::exception_ptr>& errors) {
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

template <typename Fn>
void parallel_for(std::size_t n, int workers, Fn&& fn) {
  std::vector<std::exception_ptr> errors(n);
  const int threads = workers > 0 ? workers : omp_get_max_threads();
  const auto count = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(dynamic, 4) num_threads(threads)
  for (std::ptrdiff_t i = 0; i < count; ++i) {
    const auto k = static_cast<std::size_t>(i);
    try {
      fn(k);
    } catch (...) {
      errors[k] = std::current_exception();
    }
  }
  rethrow_first(errors);
}

using TripletSet = std::unordered_set<Triplet, TripletHash>;

std::vector<Triplet> negatives_for(const Graph& g, const Triplet& pos, const ProtocolOptions& opts,
                                   const TripletSet& avoid, std::size_t index) {
  std::mt19937_64 rng(derive_seed(opts.seed, 0, index));
  SamplingOptions sopts{opts.require_subgraph, opts.max_retries, opts.extract};
  if (opts.protocol == Protocol::ExchangeHeadTail) {
    auto neg = sample_negative(g, pos, CorruptMode::ExchangeHeadTail, sopts, rng, &avoid);
    if (!neg) return {};
    return {*neg};
  }
  const int wanted = opts.protocol == Protocol::HitsAtK ? opts.num_negatives : 1;
  std::vector<Triplet> out;
  int failures = 0;
  while (static_cast<int>(out.size()) < wanted && failures < opts.max_retries) {
    const auto mode = pick_replace_mode(opts.negative_mode, rng);
    auto neg = sample_negative(g, pos, mode, sopts, rng, &avoid);
    if (!neg) break;  // the whole retry budget was spent on one draw
    if (std::find(out.begin(), out.end(), *neg) != out.end()) {
      ++failures;
      continue;
    }
    out.push_back(*neg);
  }
  return out;
}

}  // namespace

const char* to_string(Protocol p) {
  switch (p) {
    case Protocol::AucOneNegative: return "auc-one-negative";
    case Protocol::HitsAtK: return "hits-k";
    case Protocol::ExchangeHeadTail: return "exchange-ht";
  }
  return "?";
}

Protocol parse_protocol(const std::string& s) {
  if (s == "auc-one-negative" || s == "auc") return Protocol::AucOneNegative;
  if (s == "hits-k" || s == "hits") return Protocol::HitsAtK;
  if (s == "exchange-ht" || s == "exchange") return Protocol::ExchangeHeadTail;
  throw ConfigError("unknown protocol '" + s + "' (auc-one-negative, hits-k, exchange-ht)");
}

std::string EvalReport::summary() const {
  std::ostringstream s;
  s << "protocol=" << to_string(protocol) << '\n';
  s << "auc_pr=" << exact(auc_pr) << '\n';
  s << "auc_roc=" << exact(auc_roc) << '\n';
  if (hits_at_k) s << "hits@" << k << '=' << exact(*hits_at_k) << '\n';
  s << "positives=" << positives << '\n';
  s << "negatives=" << negatives << '\n';
  s << "empty_positives=" << empty_positives << '\n';
  s << "empty_negatives=" << empty_negatives << '\n';
  s << "fallback_positives=" << fallback_positives << '\n';
  s << "fallback_negatives=" << fallback_negatives << '\n';
  s << "skipped=" << skipped << '\n';
  s << "negative_shortfall=" << negative_shortfall << '\n';
  return s.str();
}

EvalReport run_protocol(const Graph& g, std::span<const Triplet> tests,
                        const CandidateScorer& scorer, const ProtocolOptions& opts) {
  if (opts.protocol == Protocol::HitsAtK && (opts.num_negatives < 1 || opts.k < 1)) {
    throw ConfigError("hits-k needs num_negatives >= 1 and k >= 1");
  }
  const TripletSet avoid(tests.begin(), tests.end());

  std::vector<std::vector<Triplet>> negs(tests.size());
  parallel_for(tests.size(), opts.workers, [&](std::size_t i) {
    if (tests[i].head != tests[i].tail) negs[i] = negatives_for(g, tests[i], opts, avoid, i);
  });

  EvalReport report;
  report.protocol = opts.protocol;
  report.k = opts.k;
  for (std::size_t i = 0; i < tests.size(); ++i) {
    if (negs[i].empty()) {
      ++report.skipped;
      continue;
    }
    if (opts.protocol == Protocol::HitsAtK && static_cast<int>(negs[i].size()) < opts.num_negatives) {
      ++report.negative_shortfall;
    }
    ScoreRecord pos;
    pos.triplet = tests[i];
    pos.positive = true;
    pos.group = i;
    report.records.push_back(pos);
    for (const auto& n : negs[i]) {
      ScoreRecord neg;
      neg.triplet = n;
      neg.group = i;
      report.records.push_back(neg);
    }
  }
  if (report.records.empty()) throw ConfigError("no test triplet could be evaluated");

  parallel_for(report.records.size(), opts.workers, [&](std::size_t i) {
    auto& r = report.records[i];
    const auto sc = scorer(r.triplet);
    r.score = sc.score;
    r.status = sc.status;
    r.directed = sc.directed;
  });

  std::vector<LabeledScore> labeled;
  labeled.reserve(report.records.size());
  std::size_t hits = 0;
  for (std::size_t i = 0; i < report.records.size();) {
    // Records of one group are contiguous: the positive, then its negatives.
    std::size_t j = i + 1;
    std::vector<double> neg_scores;
    for (; j < report.records.size() && report.records[j].group == report.records[i].group; ++j) {
      neg_scores.push_back(report.records[j].score);
    }
    auto& pos = report.records[i];
    pos.rank = pessimistic_rank(pos.score, neg_scores);
    if (pos.rank <= static_cast<std::size_t>(opts.k)) ++hits;
    i = j;
  }
  for (const auto& r : report.records) {
    labeled.push_back({r.score, r.positive});
    auto& count = r.positive ? report.positives : report.negatives;
    ++count;
    if (r.status != ExtractStatus::Ok) {
      ++(r.positive ? report.empty_positives : report.empty_negatives);
    } else if (!r.directed && !opts.force_undirected) {
      ++(r.positive ? report.fallback_positives : report.fallback_negatives);
    }
  }
  report.auc_pr = auc_pr(labeled);
  report.auc_roc = auc_roc(labeled);
  if (opts.protocol == Protocol::HitsAtK) {
    report.hits_at_k = static_cast<double>(hits) / static_cast<double>(report.positives);
  }
  return report;
}

CandidateScorer model_scorer(const Graph& g, const Model& model, const ExtractOptions& opts,
                             bool force_undirected) {
  return [&g, &model, opts, force_undirected](const Triplet& t) {
    const auto ex = extract_enclosing(g, t, opts, force_undirected);
    ScoredCandidate c;
    c.status = ex.status;
    c.directed = ex.ok() && ex.subgraph.directed;
    c.score = model.score(ex);
    return c;
  };
}

void write_scores(const std::filesystem::path& file, const Graph& g, const EvalReport& report) {
  std::ofstream out(file);
  if (!out) throw IoError("cannot write " + file.string());
  out << "head\trelation\ttail\tlabel\tscore\trank\n";
  for (const auto& r : report.records) {
    out << g.entities().name(r.triplet.head) << '\t' << g.relations().name(r.triplet.relation)
        << '\t' << g.entities().name(r.triplet.tail) << '\t' << (r.positive ? 1 : 0) << '\t'
        << exact(r.score) << '\t';
    if (r.positive) {
      out << r.rank;
    } else {
      out << '-';
    }
    out << '\n';
  }
  if (!out) throw IoError("write failed: " + file.string());
}

EvalReport average_reports(std::span<const EvalReport> reports) {
  if (reports.empty()) throw ConfigError("nothing to average");
  EvalReport avg = reports.front();
  double pr = 0.0, roc = 0.0, hits = 0.0;
  for (const auto& r : reports) {
    if (r.protocol != avg.protocol) throw ConfigError("cannot average different protocols");
    pr += r.auc_pr;
    roc += r.auc_roc;
    if (r.hits_at_k) hits += *r.hits_at_k;
  }
  const auto n = static_cast<double>(reports.size());
  avg.auc_pr = pr / n;
  avg.auc_roc = roc / n;
  if (avg.hits_at_k) avg.hits_at_k = hits / n;
  return avg;
}

}  // namespace sgr
