#pragma once

#include <stdexcept>
#include <string>

#include "mmtsm/nn/common.hpp"

namespace mmtsm {

/// Fully connected layer, weight [out, in].
class Linear {
 public:
  Linear(int in, int out) : in_(in), out_(out) {
    weight = TensorR({out, in});
    bias = TensorR({out});
    gweight = TensorR({out, in});
    gbias = TensorR({out});
  }

  void init(std::mt19937_64& rng, Real sigma = 0.001) {
    normal_init(weight, sigma, rng);
    bias.set_zero();
  }

  TensorR forward(const TensorR& x) const {
    if (x.rank() != 2 || x.dim(1) != in_)
      throw std::invalid_argument("linear: bad input " + x.shape_str());
    const int n = x.dim(0);
    TensorR y({n, out_});
    auto ym = y.as_matrix(n, out_);
    ym.noalias() = x.as_matrix(n, in_) * weight.as_matrix(out_, in_).transpose();
    ym.rowwise() += bias.as_matrix(1, out_).row(0);
    return y;
  }

  TensorR backward(const TensorR& x, const TensorR& gout) {
    const int n = x.dim(0);
    gweight.as_matrix(out_, in_).noalias() +=
        gout.as_matrix(n, out_).transpose() * x.as_matrix(n, in_);
    gbias.as_matrix(1, out_).row(0) += gout.as_matrix(n, out_).colwise().sum();
    TensorR gx({n, in_});
    gx.as_matrix(n, in_).noalias() = gout.as_matrix(n, out_) * weight.as_matrix(out_, in_);
    return gx;
  }

  void collect(const std::string& prefix, ParamRefs& out) {
    add_param(out, prefix + ".weight", weight, gweight);
    add_param(out, prefix + ".bias", bias, gbias);
  }

  TensorR weight, bias, gweight, gbias;

 private:
  int in_, out_;
};

/// Classification head shared across modalities. Holds one weight of shape
/// [M*K, F]; input row i (flattened clip-modality order) uses the K-row block
/// for modality i % M, so every modality gets its own classifier while the
/// parameter lives in a single tensor.
class ModalityHead {
 public:
  ModalityHead(int features, int classes, int modalities)
      : f_(features), k_(classes), m_(modalities) {
    weight = TensorR({m_ * k_, f_});
    bias = TensorR({m_ * k_});
    gweight = TensorR({m_ * k_, f_});
    gbias = TensorR({m_ * k_});
  }

  void init(std::mt19937_64& rng, Real sigma = 0.001) {
    normal_init(weight, sigma, rng);
    bias.set_zero();
  }

  int classes() const { return k_; }
  int modalities() const { return m_; }

  /// x: [R, F] with R a multiple of M, rows in (clip, modality) order.
  /// Returns [R, K].
  TensorR forward(const TensorR& x) const {
    if (x.rank() != 2 || x.dim(1) != f_ || x.dim(0) % m_ != 0)
      throw std::invalid_argument("head: bad input " + x.shape_str());
    const int rows = x.dim(0);
    TensorR y({rows, k_});
    auto xm = x.as_matrix(rows, f_);
    auto ym = y.as_matrix(rows, k_);
    auto wm = weight.as_matrix(m_ * k_, f_);
    auto bm = bias.as_matrix(1, m_ * k_);
    for (int r = 0; r < rows; ++r) {
      const int m = r % m_;
      ym.row(r).noalias() = xm.row(r) * wm.middleRows(m * k_, k_).transpose();
      ym.row(r) += bm.row(0).segment(m * k_, k_);
    }
    return y;
  }

  TensorR backward(const TensorR& x, const TensorR& gout) {
    const int rows = x.dim(0);
    TensorR gx({rows, f_});
    auto xm = x.as_matrix(rows, f_);
    auto gm = gout.as_matrix(rows, k_);
    auto gxm = gx.as_matrix(rows, f_);
    auto wm = weight.as_matrix(m_ * k_, f_);
    auto gwm = gweight.as_matrix(m_ * k_, f_);
    auto gbm = gbias.as_matrix(1, m_ * k_);
    for (int r = 0; r < rows; ++r) {
      const int m = r % m_;
      gwm.middleRows(m * k_, k_).noalias() += gm.row(r).transpose() * xm.row(r);
      gbm.row(0).segment(m * k_, k_) += gm.row(r);
      gxm.row(r).noalias() = gm.row(r) * wm.middleRows(m * k_, k_);
    }
    return gx;
  }

  void collect(const std::string& prefix, ParamRefs& out) {
    add_param(out, prefix + ".weight", weight, gweight);
    add_param(out, prefix + ".bias", bias, gbias);
  }

  TensorR weight, bias, gweight, gbias;

 private:
  int f_, k_, m_;
};

}  // namespace mmtsm
