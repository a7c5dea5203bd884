#pragma once

#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "mmtsm/nn/batchnorm.hpp"
#include "mmtsm/nn/conv2d.hpp"
#include "mmtsm/nn/pool.hpp"
#include "mmtsm/nn/shift.hpp"

namespace mmtsm {

inline int scaled_channels(int base, Real width_mult) {
  const long c = std::lround(base * width_mult);
  return c < 1 ? 1 : static_cast<int>(c);
}

/// Bottleneck residual block (1x1 reduce, 3x3, 1x1 expand). The temporal
/// shift feeds only the residual branch; the identity path stays untouched.
class BottleneckBlock {
 public:
  static constexpr int expansion = 4;

  BottleneckBlock(int in_c, int planes, int stride, ShiftSpec spec)
      : spec_(spec),
        conv1_(in_c, planes, 1, 1, 0),
        bn1_(planes),
        conv2_(planes, planes, 3, stride, 1),
        bn2_(planes),
        conv3_(planes, planes * expansion, 1, 1, 0),
        bn3_(planes * expansion) {
    if (stride != 1 || in_c != planes * expansion) {
      ds_conv_ = std::make_unique<Conv2d>(in_c, planes * expansion, 1, stride, 0);
      ds_bn_ = std::make_unique<BatchNorm2d>(planes * expansion);
    }
  }

  void init(std::mt19937_64& rng) {
    conv1_.init(rng);
    conv2_.init(rng);
    conv3_.init(rng);
    if (ds_conv_) ds_conv_->init(rng);
  }

  TensorR forward(const TensorR& x, int segments, bool training) {
    segments_ = segments;
    s0_ = temporal_shift(x, segments, spec_);
    c1_ = conv1_.forward(s0_);
    r1_ = relu(bn1_.forward(c1_, training));
    c2_ = conv2_.forward(r1_);
    r2_ = relu(bn2_.forward(c2_, training));
    c3_ = conv3_.forward(r2_);
    TensorR sum = bn3_.forward(c3_, training);
    if (ds_conv_) {
      dsc_ = ds_conv_->forward(x);
      sum.as_array() += ds_bn_->forward(dsc_, training).as_array();
    } else {
      sum.as_array() += x.as_array();
    }
    y_ = relu(sum);
    return y_;
  }

  TensorR backward(const TensorR& x, const TensorR& gout) {
    TensorR gsum = relu_backward(y_, gout);
    TensorR gc3 = bn3_.backward(c3_, gsum);
    TensorR gr2 = conv3_.backward(r2_, gc3);
    TensorR gc2 = bn2_.backward(c2_, relu_backward(r2_, gr2));
    TensorR gr1 = conv2_.backward(r1_, gc2);
    TensorR gc1 = bn1_.backward(c1_, relu_backward(r1_, gr1));
    TensorR gs0 = conv1_.backward(s0_, gc1);
    TensorR gx = temporal_shift_backward(gs0, segments_, spec_);
    if (ds_conv_) {
      TensorR gdsc = ds_bn_->backward(dsc_, gsum);
      gx.as_array() += ds_conv_->backward(x, gdsc).as_array();
    } else {
      gx.as_array() += gsum.as_array();
    }
    return gx;
  }

  void collect(const std::string& prefix, ParamRefs& out) {
    conv1_.collect(prefix + ".conv1", out);
    bn1_.collect(prefix + ".bn1", out);
    conv2_.collect(prefix + ".conv2", out);
    bn2_.collect(prefix + ".bn2", out);
    conv3_.collect(prefix + ".conv3", out);
    bn3_.collect(prefix + ".bn3", out);
    if (ds_conv_) {
      ds_conv_->collect(prefix + ".downsample.conv", out);
      ds_bn_->collect(prefix + ".downsample.bn", out);
    }
  }

  void set_shift_enabled(bool on) { spec_.enabled = on; }
  void set_bn_cumulative(bool on) {
    bn1_.set_cumulative(on);
    bn2_.set_cumulative(on);
    bn3_.set_cumulative(on);
    if (ds_bn_) ds_bn_->set_cumulative(on);
  }
  void reset_bn_stats() {
    bn1_.reset_running_stats();
    bn2_.reset_running_stats();
    bn3_.reset_running_stats();
    if (ds_bn_) ds_bn_->reset_running_stats();
  }

 private:
  ShiftSpec spec_;
  int segments_ = 1;
  Conv2d conv1_, conv2_, conv3_;
  BatchNorm2d bn1_, bn2_, bn3_;
  std::unique_ptr<Conv2d> ds_conv_;
  std::unique_ptr<BatchNorm2d> ds_bn_;
  TensorR s0_, c1_, r1_, c2_, r2_, c3_, dsc_, y_;
};

/// Inverted residual block (1x1 expand, 3x3 depthwise, 1x1 linear project).
/// Shift is applied only when the skip connection exists.
class InvertedResidual {
 public:
  InvertedResidual(int in_c, int out_c, int stride, int expand, ShiftSpec spec)
      : spec_(spec),
        skip_(stride == 1 && in_c == out_c),
        conv1_(in_c, in_c * expand, 1, 1, 0),
        bn1_(in_c * expand),
        conv2_(in_c * expand, in_c * expand, 3, stride, 1, in_c * expand),
        bn2_(in_c * expand),
        conv3_(in_c * expand, out_c, 1, 1, 0),
        bn3_(out_c) {
    if (!skip_) spec_.enabled = false;
  }

  void init(std::mt19937_64& rng) {
    conv1_.init(rng);
    conv2_.init(rng);
    conv3_.init(rng);
  }

  TensorR forward(const TensorR& x, int segments, bool training) {
    segments_ = segments;
    s0_ = temporal_shift(x, segments, spec_);
    c1_ = conv1_.forward(s0_);
    r1_ = relu(bn1_.forward(c1_, training));
    c2_ = conv2_.forward(r1_);
    r2_ = relu(bn2_.forward(c2_, training));
    c3_ = conv3_.forward(r2_);
    TensorR y = bn3_.forward(c3_, training);
    if (skip_) y.as_array() += x.as_array();
    return y;
  }

  TensorR backward(const TensorR& x, const TensorR& gout) {
    (void)x;
    TensorR gc3 = bn3_.backward(c3_, gout);
    TensorR gr2 = conv3_.backward(r2_, gc3);
    TensorR gc2 = bn2_.backward(c2_, relu_backward(r2_, gr2));
    TensorR gr1 = conv2_.backward(r1_, gc2);
    TensorR gc1 = bn1_.backward(c1_, relu_backward(r1_, gr1));
    TensorR gs0 = conv1_.backward(s0_, gc1);
    TensorR gx = temporal_shift_backward(gs0, segments_, spec_);
    if (skip_) gx.as_array() += gout.as_array();
    return gx;
  }

  void collect(const std::string& prefix, ParamRefs& out) {
    conv1_.collect(prefix + ".expand", out);
    bn1_.collect(prefix + ".bn1", out);
    conv2_.collect(prefix + ".dwise", out);
    bn2_.collect(prefix + ".bn2", out);
    conv3_.collect(prefix + ".project", out);
    bn3_.collect(prefix + ".bn3", out);
  }

  void set_shift_enabled(bool on) {
    if (skip_) spec_.enabled = on;
  }
  void set_bn_cumulative(bool on) {
    bn1_.set_cumulative(on);
    bn2_.set_cumulative(on);
    bn3_.set_cumulative(on);
  }
  void reset_bn_stats() {
    bn1_.reset_running_stats();
    bn2_.reset_running_stats();
    bn3_.reset_running_stats();
  }

 private:
  ShiftSpec spec_;
  bool skip_;
  int segments_ = 1;
  Conv2d conv1_, conv2_, conv3_;
  BatchNorm2d bn1_, bn2_, bn3_;
  TensorR s0_, c1_, r1_, c2_, r2_, c3_;
};

/// Frame-level 2D backbone: stem + residual stages + global average pool.
/// Consumes [N, C, H, W] with N = clips * modalities * segments and returns
/// pooled features [N, F]. Presets: deep-50 and deep-101 are bottleneck
/// residual nets of the usual stage layouts; mobile is a small
/// inverted-residual net used by the backbone ablation.
class Backbone {
 public:
  Backbone(const std::string& preset, Real width_mult, int input_channels, ShiftSpec spec)
      : preset_(preset), pool_(3, 2, 1) {
    if (preset == "deep-50" || preset == "deep-101") {
      const std::vector<int> layout =
          preset == "deep-50" ? std::vector<int>{3, 4, 6, 3} : std::vector<int>{3, 4, 23, 3};
      const int stem = scaled_channels(64, width_mult);
      stem_conv_ = std::make_unique<Conv2d>(input_channels, stem, 7, 2, 3);
      stem_bn_ = std::make_unique<BatchNorm2d>(stem);
      use_maxpool_ = true;
      int in_c = stem;
      const int base_planes[4] = {64, 128, 256, 512};
      for (int stage = 0; stage < 4; ++stage) {
        const int planes = scaled_channels(base_planes[stage], width_mult);
        const int stride = stage == 0 ? 1 : 2;
        for (int b = 0; b < layout[stage]; ++b) {
          deep_blocks_.emplace_back(std::make_unique<BottleneckBlock>(
              in_c, planes, b == 0 ? stride : 1, spec));
          block_names_.push_back("layer" + std::to_string(stage + 1) + "." + std::to_string(b));
          in_c = planes * BottleneckBlock::expansion;
        }
      }
      features_ = in_c;
    } else if (preset == "mobile") {
      const int stem = scaled_channels(16, width_mult);
      stem_conv_ = std::make_unique<Conv2d>(input_channels, stem, 3, 2, 1);
      stem_bn_ = std::make_unique<BatchNorm2d>(stem);
      use_maxpool_ = false;
      struct Stage {
        int out, stride, repeat;
      };
      const Stage stages[4] = {{24, 2, 2}, {32, 2, 2}, {64, 2, 2}, {96, 1, 2}};
      int in_c = stem;
      int idx = 0;
      for (const auto& st : stages) {
        const int out_c = scaled_channels(st.out, width_mult);
        for (int b = 0; b < st.repeat; ++b) {
          mobile_blocks_.emplace_back(std::make_unique<InvertedResidual>(
              in_c, out_c, b == 0 ? st.stride : 1, 4, spec));
          block_names_.push_back("features." + std::to_string(idx++));
          in_c = out_c;
        }
      }
      const int last = scaled_channels(256, width_mult);
      final_conv_ = std::make_unique<Conv2d>(in_c, last, 1, 1, 0);
      final_bn_ = std::make_unique<BatchNorm2d>(last);
      features_ = last;
    } else {
      throw std::invalid_argument("unknown backbone preset: " + preset);
    }
  }

  int features() const { return features_; }
  const std::string& preset() const { return preset_; }

  void init(std::mt19937_64& rng) {
    stem_conv_->init(rng);
    for (auto& b : deep_blocks_) b->init(rng);
    for (auto& b : mobile_blocks_) b->init(rng);
    if (final_conv_) final_conv_->init(rng);
  }

  TensorR forward(const TensorR& x, int segments, bool training) {
    x0_ = x;
    c0_ = stem_conv_->forward(x0_);
    r0_ = relu(stem_bn_->forward(c0_, training));
    TensorR cur = use_maxpool_ ? pool_.forward(r0_) : r0_;
    block_inputs_.clear();
    const std::size_t n_blocks = deep_blocks_.size() + mobile_blocks_.size();
    block_inputs_.reserve(n_blocks);
    for (auto& b : deep_blocks_) {
      block_inputs_.push_back(std::move(cur));
      cur = b->forward(block_inputs_.back(), segments, training);
    }
    for (auto& b : mobile_blocks_) {
      block_inputs_.push_back(std::move(cur));
      cur = b->forward(block_inputs_.back(), segments, training);
    }
    if (final_conv_) {
      fc_in_ = std::move(cur);
      fc_c_ = final_conv_->forward(fc_in_);
      cur = relu(final_bn_->forward(fc_c_, training));
      fc_r_ = cur;
    }
    gap_h_ = cur.dim(2);
    gap_w_ = cur.dim(3);
    return global_avg_pool(cur);
  }

  TensorR backward(const TensorR& gfeats) {
    TensorR g = global_avg_pool_backward(gfeats, gap_h_, gap_w_);
    if (final_conv_) {
      TensorR gc = final_bn_->backward(fc_c_, relu_backward(fc_r_, g));
      g = final_conv_->backward(fc_in_, gc);
    }
    for (auto it = mobile_blocks_.rbegin(); it != mobile_blocks_.rend(); ++it) {
      const std::size_t i = deep_blocks_.size() +
                            (mobile_blocks_.rend() - it - 1);
      g = (*it)->backward(block_inputs_[i], g);
    }
    for (auto it = deep_blocks_.rbegin(); it != deep_blocks_.rend(); ++it) {
      const std::size_t i = static_cast<std::size_t>(deep_blocks_.rend() - it - 1);
      g = (*it)->backward(block_inputs_[i], g);
    }
    if (use_maxpool_) g = pool_.backward(g);
    TensorR gc0 = stem_bn_->backward(c0_, relu_backward(r0_, g));
    return stem_conv_->backward(x0_, gc0);
  }

  void collect(ParamRefs& out) {
    stem_conv_->collect("stem.conv", out);
    stem_bn_->collect("stem.bn", out);
    std::size_t n = 0;
    for (auto& b : deep_blocks_) b->collect(block_names_[n++], out);
    for (auto& b : mobile_blocks_) b->collect(block_names_[n++], out);
    if (final_conv_) {
      final_conv_->collect("final.conv", out);
      final_bn_->collect("final.bn", out);
    }
  }

  void set_shift_enabled(bool on) {
    for (auto& b : deep_blocks_) b->set_shift_enabled(on);
    for (auto& b : mobile_blocks_) b->set_shift_enabled(on);
  }
  void set_bn_cumulative(bool on) {
    stem_bn_->set_cumulative(on);
    for (auto& b : deep_blocks_) b->set_bn_cumulative(on);
    for (auto& b : mobile_blocks_) b->set_bn_cumulative(on);
    if (final_bn_) final_bn_->set_cumulative(on);
  }
  void reset_bn_stats() {
    stem_bn_->reset_running_stats();
    for (auto& b : deep_blocks_) b->reset_bn_stats();
    for (auto& b : mobile_blocks_) b->reset_bn_stats();
    if (final_bn_) final_bn_->reset_running_stats();
  }

 private:
  std::string preset_;
  bool use_maxpool_ = false;
  std::unique_ptr<Conv2d> stem_conv_;
  std::unique_ptr<BatchNorm2d> stem_bn_;
  MaxPool2d pool_;
  std::vector<std::unique_ptr<BottleneckBlock>> deep_blocks_;
  std::vector<std::unique_ptr<InvertedResidual>> mobile_blocks_;
  std::unique_ptr<Conv2d> final_conv_;
  std::unique_ptr<BatchNorm2d> final_bn_;
  std::vector<std::string> block_names_;
  int features_ = 0;
  int gap_h_ = 0, gap_w_ = 0;
  TensorR x0_, c0_, r0_, fc_in_, fc_c_, fc_r_;
  std::vector<TensorR> block_inputs_;
};

}  // namespace mmtsm
