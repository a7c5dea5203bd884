#pragma once

#include <stdexcept>
#include <string>

#include "mmtsm/nn/common.hpp"

namespace mmtsm {

/// 2D convolution over [N, C, H, W], square kernel, optional channel groups
/// (groups == in_c gives a depthwise conv). Lowered to im2col + GEMM; 1x1
/// stride-1 convs skip the lowering and multiply the frame directly.
class Conv2d {
 public:
  Conv2d(int in_c, int out_c, int kernel, int stride, int pad, int groups = 1,
         bool bias = false)
      : in_c_(in_c), out_c_(out_c), k_(kernel), stride_(stride), pad_(pad),
        groups_(groups), has_bias_(bias) {
    if (in_c % groups != 0 || out_c % groups != 0)
      throw std::invalid_argument("conv2d: channels not divisible by groups");
    const int cg = in_c / groups;
    weight_ = TensorR({out_c, cg, k_, k_});
    gweight_ = TensorR(weight_.shape());
    if (has_bias_) {
      bias_ = TensorR({out_c});
      gbias_ = TensorR({out_c});
    }
  }

  void init(std::mt19937_64& rng) {
    // fan_out = out_c/groups * k * k per input connection group
    kaiming_normal_fan_out(weight_, static_cast<std::size_t>(out_c_ / groups_) * k_ * k_, rng);
    if (has_bias_) bias_.set_zero();
  }

  int out_size(int in) const { return (in + 2 * pad_ - k_) / stride_ + 1; }
  int in_channels() const { return in_c_; }
  int out_channels() const { return out_c_; }

  TensorR forward(const TensorR& x) const {
    check_input(x);
    const int n = x.dim(0), h = x.dim(2), w = x.dim(3);
    const int oh = out_size(h), ow = out_size(w);
    TensorR y({n, out_c_, oh, ow});
    const int cg = in_c_ / groups_, ocg = out_c_ / groups_;
    const int cols = oh * ow, rows = cg * k_ * k_;

    if (is_pointwise()) {
      for (int i = 0; i < n; ++i) {
        auto xm = frame_map(x, i, in_c_, h * w);
        auto ym = frame_map_mut(y, i, out_c_, cols);
        ym.noalias() = weight_.as_matrix(out_c_, in_c_) * xm;
      }
    } else {
      TensorR col({rows, cols});
      for (int i = 0; i < n; ++i) {
        for (int g = 0; g < groups_; ++g) {
          im2col(x, i, g * cg, cg, h, w, oh, ow, col);
          auto wg = weight_.as_matrix(out_c_, rows).middleRows(g * ocg, ocg);
          frame_map_mut(y, i, out_c_, cols).middleRows(g * ocg, ocg).noalias() =
              wg * col.as_matrix(rows, cols);
        }
      }
    }
    if (has_bias_) {
      for (int i = 0; i < n; ++i) {
        auto ym = frame_map_mut(y, i, out_c_, cols);
        ym.colwise() += bias_.as_matrix(out_c_, 1).col(0);
      }
    }
    return y;
  }

  /// Accumulates weight/bias grads, returns grad w.r.t. x. `x` must be the
  /// forward input (columns are re-lowered rather than cached).
  TensorR backward(const TensorR& x, const TensorR& gout) {
    check_input(x);
    const int n = x.dim(0), h = x.dim(2), w = x.dim(3);
    const int oh = out_size(h), ow = out_size(w);
    const int cg = in_c_ / groups_, ocg = out_c_ / groups_;
    const int cols = oh * ow, rows = cg * k_ * k_;
    TensorR gx(x.shape());

    if (is_pointwise()) {
      auto wm = weight_.as_matrix(out_c_, in_c_);
      auto gw = gweight_.as_matrix(out_c_, in_c_);
      for (int i = 0; i < n; ++i) {
        auto xm = frame_map(x, i, in_c_, cols);
        auto gm = frame_map(gout, i, out_c_, cols);
        gw.noalias() += gm * xm.transpose();
        frame_map_mut(gx, i, in_c_, cols).noalias() = wm.transpose() * gm;
      }
    } else {
      TensorR col({rows, cols});
      TensorR gcol({rows, cols});
      for (int i = 0; i < n; ++i) {
        for (int g = 0; g < groups_; ++g) {
          im2col(x, i, g * cg, cg, h, w, oh, ow, col);
          auto wg = weight_.as_matrix(out_c_, rows).middleRows(g * ocg, ocg);
          auto gwg = gweight_.as_matrix(out_c_, rows).middleRows(g * ocg, ocg);
          auto gm = frame_map(gout, i, out_c_, cols).middleRows(g * ocg, ocg);
          gwg.noalias() += gm * col.as_matrix(rows, cols).transpose();
          gcol.as_matrix(rows, cols).noalias() = wg.transpose() * gm;
          col2im_add(gcol, i, g * cg, cg, h, w, oh, ow, gx);
        }
      }
    }
    if (has_bias_) {
      for (int i = 0; i < n; ++i)
        gbias_.as_matrix(out_c_, 1).col(0) += frame_map(gout, i, out_c_, cols).rowwise().sum();
    }
    return gx;
  }

  void collect(const std::string& prefix, ParamRefs& out) {
    add_param(out, prefix + ".weight", weight_, gweight_);
    if (has_bias_) add_param(out, prefix + ".bias", bias_, gbias_);
  }

  TensorR& weight() { return weight_; }

 private:
  bool is_pointwise() const { return k_ == 1 && stride_ == 1 && pad_ == 0 && groups_ == 1; }

  void check_input(const TensorR& x) const {
    if (x.rank() != 4 || x.dim(1) != in_c_)
      throw std::invalid_argument("conv2d: bad input shape " + x.shape_str());
  }

  static TensorR::ConstMatrixMap frame_map(const TensorR& t, int i, int c, int hw) {
    return TensorR::ConstMatrixMap(t.data() + static_cast<std::size_t>(i) * c * hw, c, hw);
  }
  static TensorR::MatrixMap frame_map_mut(TensorR& t, int i, int c, int hw) {
    return TensorR::MatrixMap(t.data() + static_cast<std::size_t>(i) * c * hw, c, hw);
  }

  void im2col(const TensorR& x, int i, int c0, int cg, int h, int w, int oh, int ow,
              TensorR& col) const {
    Real* cp = col.data();
    for (int c = 0; c < cg; ++c) {
      const Real* plane =
          x.data() + ((static_cast<std::size_t>(i) * in_c_) + c0 + c) * h * w;
      for (int ky = 0; ky < k_; ++ky) {
        for (int kx = 0; kx < k_; ++kx) {
          for (int oy = 0; oy < oh; ++oy) {
            const int iy = oy * stride_ - pad_ + ky;
            if (iy < 0 || iy >= h) {
              for (int ox = 0; ox < ow; ++ox) *cp++ = Real(0);
              continue;
            }
            const Real* row = plane + static_cast<std::size_t>(iy) * w;
            for (int ox = 0; ox < ow; ++ox) {
              const int ix = ox * stride_ - pad_ + kx;
              *cp++ = (ix >= 0 && ix < w) ? row[ix] : Real(0);
            }
          }
        }
      }
    }
  }

  void col2im_add(const TensorR& col, int i, int c0, int cg, int h, int w, int oh, int ow,
                  TensorR& gx) const {
    const Real* cp = col.data();
    for (int c = 0; c < cg; ++c) {
      Real* plane = gx.data() + ((static_cast<std::size_t>(i) * in_c_) + c0 + c) * h * w;
      for (int ky = 0; ky < k_; ++ky) {
        for (int kx = 0; kx < k_; ++kx) {
          for (int oy = 0; oy < oh; ++oy) {
            const int iy = oy * stride_ - pad_ + ky;
            if (iy < 0 || iy >= h) {
              cp += ow;
              continue;
            }
            Real* row = plane + static_cast<std::size_t>(iy) * w;
            for (int ox = 0; ox < ow; ++ox) {
              const int ix = ox * stride_ - pad_ + kx;
              if (ix >= 0 && ix < w) row[ix] += *cp;
              ++cp;
            }
          }
        }
      }
    }
  }

  int in_c_, out_c_, k_, stride_, pad_, groups_;
  bool has_bias_;
  TensorR weight_, gweight_, bias_, gbias_;
};

}  // namespace mmtsm
