#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace sgr {

struct LabeledScore {
  double score = 0.0;
  bool positive = false;
};

// Area under the precision-recall curve as step-wise average precision:
// sum over distinct score thresholds (descending) of
//   (new positives at this threshold / total positives) * precision.
// Tied scores form a single threshold. Throws if either class is missing.
double auc_pr(std::span<const LabeledScore> scored);

// Probability that a random positive outscores a random negative, ties
// counted one half. Throws if either class is missing.
double auc_roc(std::span<const LabeledScore> scored);

// 1-based rank of `score` among itself and `others`; ties rank pessimistically
// (every other item with an equal score counts as ahead).
std::size_t pessimistic_rank(double score, std::span<const double> others);

// True iff the positive ranks within the top k against the negatives.
bool hits_at_k(double positive, std::span<const double> negatives, std::size_t k);

}  // namespace sgr
