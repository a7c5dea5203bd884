#pragma once

#include <stdexcept>
#include <string>

#include "mmtsm/core/rng.hpp"
#include "mmtsm/model/backbone.hpp"
#include "mmtsm/nn/linear.hpp"

namespace mmtsm {

struct ModelConfig {
  std::string preset = "deep-50";
  Real width_mult = 1.0;
  int input_channels = 3;
  int classes = 20;
  int modalities = 3;
  int segments = 8;
  ShiftSpec shift;
};

/// Segment network over folded multimodal batches. Input frames arrive as
/// [B*M*S, C, H, W] in (clip, modality, segment) order; the backbone treats
/// them as independent images except for the temporal shift, which couples
/// the S segments inside each (clip, modality) group. Pooled features are
/// averaged over segments and mapped to per-modality class scores.
class TsmModel {
 public:
  explicit TsmModel(ModelConfig cfg)
      : cfg_(cfg),
        backbone_(cfg.preset, cfg.width_mult, cfg.input_channels, cfg.shift),
        head_(backbone_.features(), cfg.classes, cfg.modalities) {}

  const ModelConfig& config() const { return cfg_; }
  int features() const { return backbone_.features(); }

  void init(std::uint64_t seed) {
    auto rng = make_engine(mix_seed({seed, 0x6d6f64u}));
    backbone_.init(rng);
    head_.init(rng);
  }

  /// x: [B*M*S, C, H, W]; returns logits [B, M, K].
  TensorR forward(const TensorR& x, int segments, bool training) {
    const int m = cfg_.modalities;
    if (x.rank() != 4 || segments < 1 || x.dim(0) % (m * segments) != 0)
      throw std::invalid_argument("model: leading dim " + std::to_string(x.dim(0)) +
                                  " incompatible with M=" + std::to_string(m) +
                                  " S=" + std::to_string(segments));
    segments_ = segments;
    TensorR feats = backbone_.forward(x, segments, training);
    const int groups = feats.dim(0) / segments;
    const int f = feats.dim(1);
    cons_ = TensorR({groups, f});
    auto fm = feats.as_matrix(feats.dim(0), f);
    auto cm = cons_.as_matrix(groups, f);
    for (int g = 0; g < groups; ++g)
      cm.row(g) = fm.middleRows(g * segments, segments).colwise().mean();
    TensorR logits = head_.forward(cons_);
    logits.reshape({groups / m, m, cfg_.classes});
    return logits;
  }

  /// glogits: [B, M, K] gradient of the loss; accumulates parameter grads.
  void backward(TensorR glogits) {
    const int groups = cons_.dim(0);
    const int f = cons_.dim(1);
    glogits.reshape({groups, cfg_.classes});
    TensorR gcons = head_.backward(cons_, glogits);
    TensorR gfeats({groups * segments_, f});
    auto gfm = gfeats.as_matrix(groups * segments_, f);
    auto gcm = gcons.as_matrix(groups, f);
    const Real inv = Real(1) / static_cast<Real>(segments_);
    for (int g = 0; g < groups; ++g)
      for (int s = 0; s < segments_; ++s) gfm.row(g * segments_ + s) = gcm.row(g) * inv;
    backbone_.backward(gfeats);
  }

  ParamRefs& params() {
    if (params_.empty()) {
      backbone_.collect(params_);
      for (auto& p : params_) p.name = "backbone." + p.name;
      head_.collect("head", params_);
    }
    return params_;
  }

  void zero_grads() {
    for (auto& p : params())
      if (p.grad) p.grad->set_zero();
  }

  void set_shift_enabled(bool on) {
    cfg_.shift.enabled = on;
    backbone_.set_shift_enabled(on);
  }
  void set_bn_cumulative(bool on) { backbone_.set_bn_cumulative(on); }
  void reset_bn_stats() { backbone_.reset_bn_stats(); }

 private:
  ModelConfig cfg_;
  Backbone backbone_;
  ModalityHead head_;
  ParamRefs params_;
  int segments_ = 1;
  TensorR cons_;
};

}  // namespace mmtsm
