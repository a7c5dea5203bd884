#pragma once

#include <cstring>
#include <stdexcept>

#include "mmtsm/core/tensor.hpp"

namespace mmtsm {

/// How the temporal shift slices channels. With fold_divisor d, the first
/// C/d channels move one step back in time (frame t sees t+1), the next C/d
/// move forward (frame t sees t-1), the rest pass through untouched.
/// Boundaries are zero-padded.
struct ShiftSpec {
  int fold_divisor = 8;
  bool enabled = true;
};

namespace detail {

/// Core data movement shared by forward and adjoint. `fwd_first` selects
/// which fold receives the future frame.
template <typename S>
Tensor<S> shift_impl(const Tensor<S>& x, int segments, int fold, bool fwd_first) {
  const int n = x.dim(0), c = x.dim(1);
  const std::size_t plane = x.numel() / (static_cast<std::size_t>(n) * c);
  const int groups = n / segments;
  Tensor<S> out(x.shape());
  const S* src = x.data();
  S* dst = out.data();
  const std::size_t frame = static_cast<std::size_t>(c) * plane;
  for (int g = 0; g < groups; ++g) {
    for (int t = 0; t < segments; ++t) {
      const std::size_t o = (static_cast<std::size_t>(g) * segments + t) * frame;
      // fold A: pull from t+1 (or t-1 when adjoint flips the roles)
      const int ta = fwd_first ? t + 1 : t - 1;
      if (ta >= 0 && ta < segments) {
        const std::size_t i = (static_cast<std::size_t>(g) * segments + ta) * frame;
        std::memcpy(dst + o, src + i, sizeof(S) * plane * fold);
      }
      const int tb = fwd_first ? t - 1 : t + 1;
      if (tb >= 0 && tb < segments) {
        const std::size_t i = (static_cast<std::size_t>(g) * segments + tb) * frame;
        std::memcpy(dst + o + plane * fold, src + i + plane * fold, sizeof(S) * plane * fold);
      }
      // remaining channels copy through
      std::memcpy(dst + o + 2 * plane * fold, src + o + 2 * plane * fold,
                  sizeof(S) * plane * (c - 2 * fold));
    }
  }
  return out;
}

template <typename S>
void shift_check(const Tensor<S>& x, int segments, const ShiftSpec& spec) {
  if (x.rank() < 2) throw std::invalid_argument("temporal_shift: rank must be >= 2");
  if (segments < 1) throw std::invalid_argument("temporal_shift: segments must be >= 1");
  if (x.dim(0) % segments != 0)
    throw std::invalid_argument("temporal_shift: leading dim not divisible by segments");
  if (spec.fold_divisor < 1) throw std::invalid_argument("temporal_shift: bad fold divisor");
  const int fold = x.dim(1) / spec.fold_divisor;
  if (2 * fold > x.dim(1))
    throw std::invalid_argument("temporal_shift: 2*(C/d) exceeds channel count");
}

}  // namespace detail

/// Temporal shift over a [N, C, ...] tensor whose leading dim is groups of
/// `segments` consecutive frames. Zero-cost temporal mixing: no arithmetic,
/// only channel-block moves along the segment axis.
template <typename S>
Tensor<S> temporal_shift(const Tensor<S>& x, int segments, const ShiftSpec& spec) {
  detail::shift_check(x, segments, spec);
  if (!spec.enabled) return x;
  const int fold = x.dim(1) / spec.fold_divisor;
  return detail::shift_impl(x, segments, fold, /*fwd_first=*/true);
}

/// Adjoint of temporal_shift: identical movement with the two shifted folds
/// exchanged. grad(sum(shift(x) * g)) w.r.t. x equals this applied to g.
template <typename S>
Tensor<S> temporal_shift_backward(const Tensor<S>& grad_out, int segments,
                                  const ShiftSpec& spec) {
  detail::shift_check(grad_out, segments, spec);
  if (!spec.enabled) return grad_out;
  const int fold = grad_out.dim(1) / spec.fold_divisor;
  return detail::shift_impl(grad_out, segments, fold, /*fwd_first=*/false);
}

}  // namespace mmtsm
