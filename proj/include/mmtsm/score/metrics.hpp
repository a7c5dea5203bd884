#pragma once

#include <vector>

#include "mmtsm/core/tensor.hpp"

namespace mmtsm {

/// Rank of `label` under descending score with ties broken toward lower
/// class index: the number of classes that place strictly ahead of it.
inline int label_rank(const std::vector<Real>& scores, int label) {
  int rank = 0;
  for (int c = 0; c < static_cast<int>(scores.size()); ++c) {
    if (c == label) continue;
    if (scores[c] > scores[label] || (scores[c] == scores[label] && c < label)) ++rank;
  }
  return rank;
}

inline int argmax_class(const std::vector<Real>& scores) {
  int best = 0;
  for (int c = 1; c < static_cast<int>(scores.size()); ++c)
    if (scores[c] > scores[best]) best = c;
  return best;
}

struct EvalMetrics {
  int classes = 0;
  int count = 0;
  int top1_hits = 0;
  int top5_hits = 0;
  std::vector<int> class_total;
  std::vector<int> class_hits;
  std::vector<std::vector<int>> confusion;  // [true][predicted]

  explicit EvalMetrics(int k = 0)
      : classes(k), class_total(k, 0), class_hits(k, 0),
        confusion(k, std::vector<int>(k, 0)) {}

  void add(const std::vector<Real>& scores, int label) {
    const int rank = label_rank(scores, label);
    const int pred = argmax_class(scores);
    ++count;
    if (rank == 0) ++top1_hits;
    if (rank < 5) ++top5_hits;
    ++class_total[label];
    if (rank == 0) ++class_hits[label];
    ++confusion[label][pred];
  }

  Real top1() const { return count ? static_cast<Real>(top1_hits) / count : 0; }
  Real top5() const { return count ? static_cast<Real>(top5_hits) / count : 0; }
  Real per_class(int c) const {
    return class_total[c] ? static_cast<Real>(class_hits[c]) / class_total[c] : 0;
  }
};

}  // namespace mmtsm
