#pragma once

#include <cmath>
#include <vector>

#include "mmtsm/nn/common.hpp"

namespace mmtsm {

/// Scale all gradients so the global L2 norm does not exceed max_norm.
/// Returns the pre-clip norm.
inline Real grad_clip(ParamRefs& params, Real max_norm) {
  Real sq = 0;
  for (auto& p : params) {
    if (!p.grad) continue;
    sq += p.grad->as_array().square().sum();
  }
  const Real norm = std::sqrt(sq);
  if (norm > max_norm && norm > 0) {
    const Real scale = max_norm / norm;
    for (auto& p : params)
      if (p.grad) p.grad->as_array() *= scale;
  }
  return norm;
}

/// Momentum SGD with coupled weight decay: the decay term joins the raw
/// gradient before the momentum update, then v = mu*v + g and theta -= lr*v.
class SgdOptimizer {
 public:
  SgdOptimizer(Real lr, Real momentum, Real weight_decay)
      : lr_(lr), mu_(momentum), wd_(weight_decay) {}

  void set_lr(Real lr) { lr_ = lr; }
  Real lr() const { return lr_; }

  void step(ParamRefs& params) {
    if (velocity_.empty()) {
      velocity_.reserve(params.size());
      for (auto& p : params)
        velocity_.emplace_back(p.grad ? TensorR(p.value->shape()) : TensorR());
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
      auto& p = params[i];
      if (!p.grad) continue;
      auto g = p.grad->as_array();
      if (wd_ != 0) g += wd_ * p.value->as_array();
      auto v = velocity_[i].as_array();
      v = mu_ * v + g;
      p.value->as_array() -= lr_ * v;
    }
  }

 private:
  Real lr_, mu_, wd_;
  std::vector<TensorR> velocity_;
};

/// Step-decay schedule: lr = base * factor^(number of passed milestones).
inline Real lr_at_epoch(Real base_lr, int epoch, const std::vector<int>& milestones,
                        Real factor) {
  Real lr = base_lr;
  for (int m : milestones)
    if (epoch >= m) lr *= factor;
  return lr;
}

}  // namespace mmtsm
