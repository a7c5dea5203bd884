#pragma once

#include <stdexcept>

#include "mmtsm/core/tensor.hpp"

namespace mmtsm {

/// Per-modality logit weights: gamma scales RGB, beta TIR, alpha DEPTH.
struct FusionWeights {
  Real gamma = 1.0;
  Real beta = 1.0;
  Real alpha = 0.2;

  void validate() const {
    if (gamma < 0 || beta < 0 || alpha < 0)
      throw std::invalid_argument("fusion weights must be non-negative");
    if (gamma == 0 && beta == 0 && alpha == 0)
      throw std::invalid_argument("at least one fusion weight must be positive");
  }
  Real operator[](int m) const { return m == 0 ? gamma : m == 1 ? beta : alpha; }
};

/// logits [B, M, K] -> gamma*L_rgb + beta*L_tir + alpha*L_depth, shape [B, K].
inline TensorR fuse_logits(const TensorR& logits, const FusionWeights& w) {
  if (logits.rank() != 3) throw std::invalid_argument("fuse: rank != 3");
  w.validate();
  const int b = logits.dim(0), m = logits.dim(1), k = logits.dim(2);
  TensorR fused({b, k});
  for (int i = 0; i < b; ++i)
    for (int j = 0; j < m; ++j) {
      const Real wj = w[j];
      for (int c = 0; c < k; ++c) fused.at(i, c) += wj * logits.at(i, j, c);
    }
  return fused;
}

/// Adjoint of fuse_logits: spreads [B, K] gradients back to [B, M, K].
inline TensorR fuse_logits_backward(const TensorR& gfused, int modalities,
                                    const FusionWeights& w) {
  const int b = gfused.dim(0), k = gfused.dim(1);
  TensorR g({b, modalities, k});
  for (int i = 0; i < b; ++i)
    for (int j = 0; j < modalities; ++j) {
      const Real wj = w[j];
      for (int c = 0; c < k; ++c) g.at(i, j, c) = wj * gfused.at(i, c);
    }
  return g;
}

}  // namespace mmtsm
