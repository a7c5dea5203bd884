#pragma once

#include <limits>
#include <stdexcept>
#include <vector>

#include "mmtsm/nn/common.hpp"

namespace mmtsm {

/// Max pooling with argmax cache so backward is a scatter.
class MaxPool2d {
 public:
  MaxPool2d(int kernel, int stride, int pad) : k_(kernel), s_(stride), p_(pad) {}

  int out_size(int in) const { return (in + 2 * p_ - k_) / s_ + 1; }

  TensorR forward(const TensorR& x) {
    if (x.rank() != 4) throw std::invalid_argument("maxpool: rank != 4");
    const int n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
    const int oh = out_size(h), ow = out_size(w);
    in_h_ = h;
    in_w_ = w;
    TensorR y({n, c, oh, ow});
    argmax_.assign(y.numel(), 0);
    const std::size_t plane = static_cast<std::size_t>(h) * w;
    std::size_t oi = 0;
    for (int i = 0; i < n; ++i) {
      for (int ch = 0; ch < c; ++ch) {
        const Real* xp = x.data() + (static_cast<std::size_t>(i) * c + ch) * plane;
        for (int yo = 0; yo < oh; ++yo) {
          for (int xo = 0; xo < ow; ++xo, ++oi) {
            Real best = -std::numeric_limits<Real>::infinity();
            std::size_t best_idx = 0;
            const int y0 = yo * s_ - p_, x0 = xo * s_ - p_;
            for (int ky = 0; ky < k_; ++ky) {
              const int yy = y0 + ky;
              if (yy < 0 || yy >= h) continue;
              for (int kx = 0; kx < k_; ++kx) {
                const int xx = x0 + kx;
                if (xx < 0 || xx >= w) continue;
                const std::size_t idx = static_cast<std::size_t>(yy) * w + xx;
                if (xp[idx] > best) {
                  best = xp[idx];
                  best_idx = idx;
                }
              }
            }
            y[oi] = best;
            argmax_[oi] = (static_cast<std::size_t>(i) * c + ch) * plane + best_idx;
          }
        }
      }
    }
    return y;
  }

  TensorR backward(const TensorR& gout) const {
    TensorR gx({gout.dim(0), gout.dim(1), in_h_, in_w_});
    for (std::size_t i = 0; i < gout.numel(); ++i) gx[argmax_[i]] += gout[i];
    return gx;
  }

 private:
  int k_, s_, p_;
  int in_h_ = 0, in_w_ = 0;
  std::vector<std::size_t> argmax_;
};

/// Global average pool [N, C, H, W] -> [N, C].
inline TensorR global_avg_pool(const TensorR& x) {
  if (x.rank() != 4) throw std::invalid_argument("gap: rank != 4");
  const int n = x.dim(0), c = x.dim(1);
  const std::size_t plane = static_cast<std::size_t>(x.dim(2)) * x.dim(3);
  TensorR y({n, c});
  for (int i = 0; i < n; ++i)
    for (int ch = 0; ch < c; ++ch) {
      const Real* p = x.data() + (static_cast<std::size_t>(i) * c + ch) * plane;
      Real sum = 0;
      for (std::size_t j = 0; j < plane; ++j) sum += p[j];
      y.at(i, ch) = sum / static_cast<Real>(plane);
    }
  return y;
}

inline TensorR global_avg_pool_backward(const TensorR& gout, int h, int w) {
  const int n = gout.dim(0), c = gout.dim(1);
  const std::size_t plane = static_cast<std::size_t>(h) * w;
  TensorR gx({n, c, h, w});
  const Real inv = Real(1) / static_cast<Real>(plane);
  for (int i = 0; i < n; ++i)
    for (int ch = 0; ch < c; ++ch) {
      const Real g = gout.at(i, ch) * inv;
      Real* p = gx.data() + (static_cast<std::size_t>(i) * c + ch) * plane;
      for (std::size_t j = 0; j < plane; ++j) p[j] = g;
    }
  return gx;
}

}  // namespace mmtsm
