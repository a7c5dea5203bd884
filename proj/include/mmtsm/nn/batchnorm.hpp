#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

#include "mmtsm/nn/common.hpp"

namespace mmtsm {

/// Batch normalization over [N, C, H, W], statistics per channel across
/// N*H*W. Training mode always normalizes with the current mini-batch
/// statistics; eval mode uses the running estimates. Cumulative mode turns
/// the running-stat update into a plain average over batches seen since the
/// last reset, which is what the weight-averaging refresh pass needs.
class BatchNorm2d {
 public:
  explicit BatchNorm2d(int channels, Real eps = 1e-5, Real momentum = 0.1)
      : c_(channels), eps_(eps), momentum_(momentum) {
    gamma_ = TensorR::full({c_}, Real(1));
    beta_ = TensorR({c_});
    ggamma_ = TensorR({c_});
    gbeta_ = TensorR({c_});
    running_mean_ = TensorR({c_});
    running_var_ = TensorR::full({c_}, Real(1));
    mean_ = TensorR({c_});
    invstd_ = TensorR({c_});
  }

  TensorR forward(const TensorR& x, bool training) {
    check_input(x);
    const int n = x.dim(0), h = x.dim(2), w = x.dim(3);
    const std::size_t plane = static_cast<std::size_t>(h) * w;
    const Real count = static_cast<Real>(n) * static_cast<Real>(plane);
    TensorR y(x.shape());

    if (training) {
      const Real k = static_cast<Real>(cumulative_ ? ++batches_seen_ : 0);
      for (int c = 0; c < c_; ++c) {
        Real sum = 0, sq = 0;
        for (int i = 0; i < n; ++i) {
          const Real* p = chan_ptr(x, i, c, plane);
          for (std::size_t j = 0; j < plane; ++j) {
            sum += p[j];
            sq += p[j] * p[j];
          }
        }
        const Real mean = sum / count;
        const Real var = std::max(Real(0), sq / count - mean * mean);
        mean_[c] = mean;
        invstd_[c] = Real(1) / std::sqrt(var + eps_);
        const Real unbiased = count > 1 ? var * count / (count - 1) : var;
        if (cumulative_) {
          running_mean_[c] += (mean - running_mean_[c]) / k;
          running_var_[c] += (unbiased - running_var_[c]) / k;
        } else {
          running_mean_[c] = (Real(1) - momentum_) * running_mean_[c] + momentum_ * mean;
          running_var_[c] = (Real(1) - momentum_) * running_var_[c] + momentum_ * unbiased;
        }
      }
      apply(x, y, mean_, invstd_, n, plane);
    } else {
      TensorR istd({c_});
      for (int c = 0; c < c_; ++c) istd[c] = Real(1) / std::sqrt(running_var_[c] + eps_);
      apply(x, y, running_mean_, istd, n, plane);
    }
    return y;
  }

  /// Backward for training-mode forward; uses the cached batch statistics.
  TensorR backward(const TensorR& x, const TensorR& gout) {
    check_input(x);
    const int n = x.dim(0), h = x.dim(2), w = x.dim(3);
    const std::size_t plane = static_cast<std::size_t>(h) * w;
    const Real count = static_cast<Real>(n) * static_cast<Real>(plane);
    TensorR gx(x.shape());
    for (int c = 0; c < c_; ++c) {
      const Real mean = mean_[c], istd = invstd_[c], gamma = gamma_[c];
      Real sum_g = 0, sum_gx = 0;
      for (int i = 0; i < n; ++i) {
        const Real* xp = chan_ptr(x, i, c, plane);
        const Real* gp = chan_ptr(gout, i, c, plane);
        for (std::size_t j = 0; j < plane; ++j) {
          sum_g += gp[j];
          sum_gx += gp[j] * (xp[j] - mean) * istd;
        }
      }
      ggamma_[c] += sum_gx;
      gbeta_[c] += sum_g;
      const Real scale = gamma * istd / count;
      for (int i = 0; i < n; ++i) {
        const Real* xp = chan_ptr(x, i, c, plane);
        const Real* gp = chan_ptr(gout, i, c, plane);
        Real* op = chan_ptr_mut(gx, i, c, plane);
        for (std::size_t j = 0; j < plane; ++j) {
          const Real xhat = (xp[j] - mean) * istd;
          op[j] = scale * (count * gp[j] - sum_g - xhat * sum_gx);
        }
      }
    }
    return gx;
  }

  void reset_running_stats() {
    running_mean_.set_zero();
    running_var_.as_array() = Real(1);
    batches_seen_ = 0;
  }
  void set_cumulative(bool on) {
    cumulative_ = on;
    batches_seen_ = 0;
  }

  void collect(const std::string& prefix, ParamRefs& out) {
    add_param(out, prefix + ".weight", gamma_, ggamma_);
    add_param(out, prefix + ".bias", beta_, gbeta_);
    add_buffer(out, prefix + ".running_mean", running_mean_);
    add_buffer(out, prefix + ".running_var", running_var_);
  }

 private:
  void check_input(const TensorR& x) const {
    if (x.rank() != 4 || x.dim(1) != c_)
      throw std::invalid_argument("batchnorm: bad input shape " + x.shape_str());
  }
  const Real* chan_ptr(const TensorR& t, int i, int c, std::size_t plane) const {
    return t.data() + (static_cast<std::size_t>(i) * c_ + c) * plane;
  }
  Real* chan_ptr_mut(TensorR& t, int i, int c, std::size_t plane) const {
    return t.data() + (static_cast<std::size_t>(i) * c_ + c) * plane;
  }
  void apply(const TensorR& x, TensorR& y, const TensorR& mean, const TensorR& istd, int n,
             std::size_t plane) const {
    for (int c = 0; c < c_; ++c) {
      const Real a = gamma_[c] * istd[c];
      const Real b = beta_[c] - a * mean[c];
      for (int i = 0; i < n; ++i) {
        const Real* xp = chan_ptr(x, i, c, plane);
        Real* yp = const_cast<Real*>(chan_ptr(y, i, c, plane));
        for (std::size_t j = 0; j < plane; ++j) yp[j] = a * xp[j] + b;
      }
    }
  }

  int c_;
  Real eps_, momentum_;
  bool cumulative_ = false;
  long batches_seen_ = 0;
  TensorR gamma_, beta_, ggamma_, gbeta_;
  TensorR running_mean_, running_var_;
  TensorR mean_, invstd_;  // cached batch stats for backward
};

}  // namespace mmtsm
