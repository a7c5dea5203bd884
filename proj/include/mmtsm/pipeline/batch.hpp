#pragma once

#include <vector>

#include "mmtsm/data/dataset.hpp"
#include "mmtsm/pipeline/augment.hpp"
#include "mmtsm/pipeline/sampling.hpp"

namespace mmtsm {

/// Per-clip record of the group decisions taken while building a batch;
/// lets tests audit that one draw and one index list served every modality.
struct GroupTrace {
  int clip_index = 0;
  GroupDraw draw;
  std::vector<int> indices;
};

/// [B][M] stacks of [S, H, W, C] -> model input [B*M*S, C, H, W].
inline TensorR stacks_to_batch(const std::vector<std::array<TensorR, kModalities>>& clips) {
  if (clips.empty()) throw std::invalid_argument("batch: no clips");
  const auto& proto = clips[0][0];
  const int s = proto.dim(0), h = proto.dim(1), w = proto.dim(2), c = proto.dim(3);
  const int b = static_cast<int>(clips.size());
  TensorR x({b * kModalities * s, c, h, w});
  int row = 0;
  for (const auto& clip : clips)
    for (const auto& stack : clip) {
      if (stack.shape() != proto.shape())
        throw std::invalid_argument("batch: stack shape mismatch " + stack.shape_str() +
                                    " vs " + proto.shape_str());
      for (int t = 0; t < s; ++t, ++row)
        for (int y = 0; y < h; ++y)
          for (int xx = 0; xx < w; ++xx)
            for (int cc = 0; cc < c; ++cc)
              x.at(row, cc, y, xx) = stack.at(t, y, xx, cc);
    }
  return x;
}

/// Assemble one training batch: per clip, one random sampling pass and one
/// augmentation draw, both derived from (seed, epoch, clip), applied to all
/// modalities.
inline TensorR build_train_batch(const std::vector<const ClipFrames*>& clips,
                                 const std::vector<int>& clip_indices,
                                 const std::vector<int>& frames_per_clip,
                                 int epoch, std::uint64_t seed, int segments,
                                 const AugmentConfig& aug, int channels,
                                 std::vector<GroupTrace>* trace = nullptr) {
  std::vector<std::array<TensorR, kModalities>> stacks;
  stacks.reserve(clips.size());
  for (std::size_t i = 0; i < clips.size(); ++i) {
    const int ci = clip_indices[i];
    const auto idx = sample_indices_once(
        frames_per_clip[i], segments, SampleMode::Random,
        mix_seed({seed, 0x73616d70u, static_cast<std::uint64_t>(epoch),
                  static_cast<std::uint64_t>(ci)}));
    auto aug_rng = make_engine(mix_seed({seed, 0x61756774u, static_cast<std::uint64_t>(epoch),
                                         static_cast<std::uint64_t>(ci)}));
    const GroupDraw draw = draw_group(aug, aug_rng);
    std::array<TensorR, kModalities> per_mod;
    for (int m = 0; m < kModalities; ++m) {
      std::vector<const Image*> sel;
      sel.reserve(idx.size());
      for (int t : idx) sel.push_back(&clips[i]->modality[m][t]);
      per_mod[m] = apply_train_augment(sel, aug, draw, channels);
    }
    stacks.push_back(std::move(per_mod));
    if (trace) trace->push_back({ci, draw, idx});
  }
  return stacks_to_batch(stacks);
}

/// Assemble one evaluation batch for a fixed per-clip index list.
inline TensorR build_eval_batch(const std::vector<const ClipFrames*>& clips,
                                const std::vector<std::vector<int>>& per_clip_indices,
                                const AugmentConfig& aug, bool tta_flip, int channels) {
  std::vector<std::array<TensorR, kModalities>> stacks;
  stacks.reserve(clips.size());
  for (std::size_t i = 0; i < clips.size(); ++i) {
    std::array<TensorR, kModalities> per_mod;
    for (int m = 0; m < kModalities; ++m) {
      std::vector<const Image*> sel;
      sel.reserve(per_clip_indices[i].size());
      for (int t : per_clip_indices[i]) sel.push_back(&clips[i]->modality[m][t]);
      per_mod[m] = apply_test_augment(sel, aug, tta_flip, channels);
    }
    stacks.push_back(std::move(per_mod));
  }
  return stacks_to_batch(stacks);
}

}  // namespace mmtsm
