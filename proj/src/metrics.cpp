#include "sgr/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "sgr/errors.hpp"

namespace sgr {
namespace {

struct ClassCounts {
  std::size_t positives = 0;
  std::size_t negatives = 0;
};

ClassCounts check_classes(std::span<const LabeledScore> scored, const char* metric) {
  ClassCounts c;
  for (const auto& s : scored) {
    if (std::isnan(s.score)) throw NumericError(std::string(metric) + ": NaN score");
    if (s.positive) {
      ++c.positives;
    } else {
      ++c.negatives;
    }
  }
  if (c.positives == 0 || c.negatives == 0) {
    throw NumericError(std::string(metric) + " is undefined without both classes");
  }
  return c;
}

std::vector<LabeledScore> sorted_desc(std::span<const LabeledScore> scored) {
  std::vector<LabeledScore> v(scored.begin(), scored.end());
  std::sort(v.begin(), v.end(),
            [](const LabeledScore& a, const LabeledScore& b) { return a.score > b.score; });
  return v;
}

}  // namespace

double auc_pr(std::span<const LabeledScore> scored) {
  const auto counts = check_classes(scored, "auc_pr");
  const auto v = sorted_desc(scored);
  const auto total_pos = static_cast<double>(counts.positives);
  std::size_t tp = 0, fp = 0;
  double area = 0.0;
  for (std::size_t i = 0; i < v.size();) {
    std::size_t group_tp = 0;
    std::size_t j = i;
    for (; j < v.size() && v[j].score == v[i].score; ++j) {
      if (v[j].positive) {
        ++group_tp;
      } else {
        ++fp;
      }
    }
    tp += group_tp;
    if (group_tp > 0) {
      area += (static_cast<double>(group_tp) / total_pos) *
              (static_cast<double>(tp) / static_cast<double>(tp + fp));
    }
    i = j;
  }
  return area;
}

double auc_roc(std::span<const LabeledScore> scored) {
  const auto counts = check_classes(scored, "auc_roc");
  auto v = sorted_desc(scored);
  std::reverse(v.begin(), v.end());
  // Ascending; every positive beats the negatives strictly below its group.
  double wins = 0.0;
  std::size_t neg_below = 0;
  for (std::size_t i = 0; i < v.size();) {
    std::size_t group_pos = 0, group_neg = 0;
    std::size_t j = i;
    for (; j < v.size() && v[j].score == v[i].score; ++j) {
      if (v[j].positive) {
        ++group_pos;
      } else {
        ++group_neg;
      }
    }
    wins += static_cast<double>(group_pos) *
            (static_cast<double>(neg_below) + 0.5 * static_cast<double>(group_neg));
    neg_below += group_neg;
    i = j;
  }
  return wins / (static_cast<double>(counts.positives) * static_cast<double>(counts.negatives));
}

std::size_t pessimistic_rank(double score, std::span<const double> others) {
  std::size_t ahead = 0;
  for (const double o : others) {
    if (o >= score) ++ahead;
  }
  return ahead + 1;
}

bool hits_at_k(double positive, std::span<const double> negatives, std::size_t k) {
  if (k < 1) throw ConfigError("hits@k needs k >= 1");
  return pessimistic_rank(positive, negatives) <= k;
}

}  // namespace sgr
