#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "mmtsm/model/fusion.hpp"

namespace mmtsm {

struct LossResult {
  Real value = 0;
  TensorR glogits;  // [B, M, K], gradient w.r.t. the per-modality logits
  TensorR probs;    // [B, K], softmax of the fused logits
};

/// Cross-entropy of the weighted-fused logits against integer labels, mean
/// over the batch. Gradient flows back through the fusion weights to every
/// modality's logits.
inline LossResult fused_cross_entropy(const TensorR& logits, const std::vector<int>& labels,
                                      const FusionWeights& w, bool want_grad = true) {
  if (logits.rank() != 3) throw std::invalid_argument("loss: logits rank != 3");
  const int b = logits.dim(0), m = logits.dim(1), k = logits.dim(2);
  if (static_cast<int>(labels.size()) != b) throw std::invalid_argument("loss: label count");

  LossResult res;
  TensorR fused = fuse_logits(logits, w);
  res.probs = TensorR({b, k});
  TensorR gfused({b, k});
  Real total = 0;
  for (int i = 0; i < b; ++i) {
    if (labels[i] < 0 || labels[i] >= k)
      throw std::invalid_argument("loss: label " + std::to_string(labels[i]) +
                                  " outside [0, " + std::to_string(k) + ")");
    Real mx = fused.at(i, 0);
    for (int c = 1; c < k; ++c) mx = std::max(mx, fused.at(i, c));
    Real lse = 0;
    for (int c = 0; c < k; ++c) lse += std::exp(fused.at(i, c) - mx);
    lse = mx + std::log(lse);
    total += lse - fused.at(i, labels[i]);
    for (int c = 0; c < k; ++c) {
      const Real p = std::exp(fused.at(i, c) - lse);
      res.probs.at(i, c) = p;
      gfused.at(i, c) = (p - (c == labels[i] ? Real(1) : Real(0))) / static_cast<Real>(b);
    }
  }
  res.value = total / static_cast<Real>(b);
  if (want_grad) res.glogits = fuse_logits_backward(gfused, m, w);
  return res;
}

}  // namespace mmtsm
