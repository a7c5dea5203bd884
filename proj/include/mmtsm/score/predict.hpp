#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "mmtsm/config.hpp"
#include "mmtsm/data/dataset.hpp"
#include "mmtsm/model/fusion.hpp"
#include "mmtsm/model/tsm_model.hpp"
#include "mmtsm/pipeline/augment.hpp"
#include "mmtsm/pipeline/sampling.hpp"
#include "mmtsm/score/metrics.hpp"

namespace mmtsm {

/// Lazily decoded clip cache over one dataset index.
class ClipStore {
 public:
  explicit ClipStore(const DatasetIndex& index) : index_(&index), cache_(index.clips.size()) {}

  const ClipFrames& get(int clip_index) {
    auto& slot = cache_.at(clip_index);
    if (!slot) slot = std::make_unique<ClipFrames>(read_clip(*index_, index_->clips[clip_index]));
    return *slot;
  }
  const DatasetIndex& index() const { return *index_; }

 private:
  const DatasetIndex* index_;
  std::vector<std::unique_ptr<ClipFrames>> cache_;
};

struct EnsembleMember {
  TsmModel* model = nullptr;
  Real weight = 1.0;
  int segments = 8;
  std::string label;  // used in reports only
};

/// Sampling plan used at evaluation time: dense scoring wins over pass
/// count, a single pass reads the deterministic segment centers, and two
/// or more passes each resample randomly under their own derived seed.
inline SamplerConfig eval_sampler(const EvalSettings& eval, int segments) {
  SamplerConfig cfg;
  cfg.segments = segments;
  if (eval.dense) {
    cfg.mode = SampleMode::Dense;
    cfg.passes = 1;
  } else if (eval.passes <= 1) {
    cfg.mode = SampleMode::Center;
    cfg.passes = 1;
  } else {
    cfg.mode = SampleMode::Random;
    cfg.passes = eval.passes;
  }
  return cfg;
}

/// Class-probability scores for a batch of clips under one model ensemble.
/// Per member: logits are fused over modalities, averaged over spatial
/// views and sampling passes, then softmaxed; member distributions are
/// combined by normalized ensemble weight. clip_keys seed the per-clip
/// sampling streams, so scores do not depend on batch composition.
std::vector<std::vector<Real>> predict_scores(
    const std::vector<EnsembleMember>& members,
    const std::vector<const ClipFrames*>& clips, const std::vector<int>& frames_per_clip,
    const EvalSettings& eval, const AugmentConfig& aug, int channels, std::uint64_t seed,
    const std::vector<std::uint64_t>& clip_keys);

/// Single-clip convenience wrapper around predict_scores.
std::vector<Real> predict_clip(const std::vector<EnsembleMember>& members,
                               const ClipFrames& clip, int frames,
                               const EvalSettings& eval, const AugmentConfig& aug,
                               int channels, std::uint64_t seed,
                               std::uint64_t clip_key = 0);

struct EvalResult {
  EvalMetrics metrics;
  std::vector<int> clip_indices;
  std::vector<std::vector<Real>> scores;  // aligned with clip_indices
};

/// Score a subset of the index (all clips when subset is empty).
EvalResult evaluate(const std::vector<EnsembleMember>& members, ClipStore& store,
                    const std::vector<int>& subset, const EvalSettings& eval,
                    const AugmentConfig& aug, int channels, std::uint64_t seed);

}  // namespace mmtsm
