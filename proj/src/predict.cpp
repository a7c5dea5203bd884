#include "mmtsm/score/predict.hpp"

#include <cmath>
#include <stdexcept>

#include "mmtsm/pipeline/batch.hpp"

namespace mmtsm {

namespace {

constexpr std::uint64_t kEvalTag = 0x6576616cu;

void check_members(const std::vector<EnsembleMember>& members) {
  if (members.empty()) throw std::invalid_argument("predict: no ensemble members");
  Real total = 0;
  const int k = members[0].model->config().classes;
  for (const auto& m : members) {
    if (!m.model) throw std::invalid_argument("predict: null model in ensemble");
    if (m.weight < 0) throw std::invalid_argument("predict: negative ensemble weight");
    if (m.segments < 1) throw std::invalid_argument("predict: member segments < 1");
    if (m.model->config().classes != k)
      throw std::invalid_argument(
          "predict: ensemble members disagree on class count (" + std::to_string(k) +
          " vs " + std::to_string(m.model->config().classes) + ")");
    total += m.weight;
  }
  if (total <= 0) throw std::invalid_argument("predict: ensemble weights sum to zero");
}

void softmax_rows(std::vector<std::vector<Real>>& rows) {
  for (auto& r : rows) {
    Real mx = r[0];
    for (Real v : r) mx = std::max(mx, v);
    Real sum = 0;
    for (Real& v : r) {
      v = std::exp(v - mx);
      sum += v;
    }
    for (Real& v : r) v /= sum;
  }
}

}  // namespace

std::vector<std::vector<Real>> predict_scores(
    const std::vector<EnsembleMember>& members,
    const std::vector<const ClipFrames*>& clips, const std::vector<int>& frames_per_clip,
    const EvalSettings& eval, const AugmentConfig& aug, int channels, std::uint64_t seed,
    const std::vector<std::uint64_t>& clip_keys) {
  check_members(members);
  const int b = static_cast<int>(clips.size());
  if (static_cast<int>(frames_per_clip.size()) != b ||
      static_cast<int>(clip_keys.size()) != b)
    throw std::invalid_argument("predict: clips, frame counts and keys must align");
  if (b == 0) return {};
  eval.fusion.validate();

  const int k = members[0].model->config().classes;
  const int views = eval.tta_flip ? 2 : 1;
  std::vector<std::vector<Real>> ensemble(b, std::vector<Real>(k, 0.0));
  Real weight_total = 0;

  for (const auto& member : members) {
    const SamplerConfig sampler = eval_sampler(eval, member.segments);
    std::vector<std::vector<std::vector<int>>> passes(b);
    for (int i = 0; i < b; ++i)
      passes[i] = sample_indices(frames_per_clip[i], sampler,
                                 mix_seed({seed, kEvalTag, clip_keys[i]}));
    const int n_passes = static_cast<int>(passes[0].size());

    std::vector<std::vector<Real>> acc(b, std::vector<Real>(k, 0.0));
    for (int p = 0; p < n_passes; ++p) {
      std::vector<std::vector<int>> indices(b);
      for (int i = 0; i < b; ++i) indices[i] = passes[i][p];
      for (int v = 0; v < views; ++v) {
        TensorR x = build_eval_batch(clips, indices, aug, v == 1, channels);
        TensorR logits = member.model->forward(x, member.segments, false);
        TensorR fused = fuse_logits(logits, eval.fusion);
        for (int i = 0; i < b; ++i)
          for (int c = 0; c < k; ++c) acc[i][c] += fused.at(i, c) / views;
      }
    }
    for (auto& row : acc)
      for (Real& v : row) v /= n_passes;

    softmax_rows(acc);
    for (int i = 0; i < b; ++i)
      for (int c = 0; c < k; ++c) ensemble[i][c] += member.weight * acc[i][c];
    weight_total += member.weight;
  }

  for (auto& row : ensemble)
    for (Real& v : row) v /= weight_total;
  return ensemble;
}

std::vector<Real> predict_clip(const std::vector<EnsembleMember>& members,
                               const ClipFrames& clip, int frames,
                               const EvalSettings& eval, const AugmentConfig& aug,
                               int channels, std::uint64_t seed, std::uint64_t clip_key) {
  return predict_scores(members, {&clip}, {frames}, eval, aug, channels, seed,
                        {clip_key})[0];
}

EvalResult evaluate(const std::vector<EnsembleMember>& members, ClipStore& store,
                    const std::vector<int>& subset, const EvalSettings& eval,
                    const AugmentConfig& aug, int channels, std::uint64_t seed) {
  const auto& index = store.index();
  std::vector<int> which = subset;
  if (which.empty())
    for (int i = 0; i < static_cast<int>(index.clips.size()); ++i) which.push_back(i);

  EvalResult result;
  result.metrics = EvalMetrics(index.num_classes());
  result.clip_indices = which;

  constexpr int kChunk = 8;
  for (std::size_t at = 0; at < which.size(); at += kChunk) {
    const std::size_t end = std::min(which.size(), at + kChunk);
    std::vector<const ClipFrames*> clips;
    std::vector<int> frames;
    std::vector<std::uint64_t> keys;
    for (std::size_t i = at; i < end; ++i) {
      const int ci = which[i];
      clips.push_back(&store.get(ci));
      frames.push_back(index.clips[ci].frames);
      keys.push_back(static_cast<std::uint64_t>(ci));
    }
    auto scores = predict_scores(members, clips, frames, eval, aug, channels, seed, keys);
    for (std::size_t i = at; i < end; ++i) {
      result.metrics.add(scores[i - at], index.clips[which[i]].label);
      result.scores.push_back(std::move(scores[i - at]));
    }
  }
  return result;
}

}  // namespace mmtsm
