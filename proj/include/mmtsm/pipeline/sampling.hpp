#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "mmtsm/core/rng.hpp"

namespace mmtsm {

enum class SampleMode { Random, Center, Dense };

struct SamplerConfig {
  int segments = 8;
  SampleMode mode = SampleMode::Random;
  int passes = 1;
};

/// One sampling pass: S indices into [0, T). Random mode draws uniformly
/// inside each bin [floor(i*T/S), floor((i+1)*T/S)); center mode takes the
/// bin midpoint floor((2i+1)*T/(2S)). Empty bins (T < S) fall back to the
/// clamped bin start, so frames repeat.
inline std::vector<int> sample_indices_once(int frames, int segments, SampleMode mode,
                                            std::uint64_t seed) {
  if (frames < 1) throw std::invalid_argument("sampler: frames < 1");
  if (segments < 1) throw std::invalid_argument("sampler: segments < 1");
  std::vector<int> idx(segments);
  auto rng = make_engine(seed);
  for (int i = 0; i < segments; ++i) {
    const long long lo = static_cast<long long>(i) * frames / segments;
    const long long hi = static_cast<long long>(i + 1) * frames / segments;
    if (mode == SampleMode::Center) {
      const long long c = (2LL * i + 1) * frames / (2LL * segments);
      idx[i] = static_cast<int>(std::min<long long>(c, frames - 1));
    } else if (hi > lo) {
      std::uniform_int_distribution<long long> d(lo, hi - 1);
      idx[i] = static_cast<int>(d(rng));
    } else {
      idx[i] = static_cast<int>(std::min<long long>(lo, frames - 1));
    }
  }
  return idx;
}

/// All passes of a sampling plan. Random/center honor cfg.passes with the
/// derived seed seed+pass; dense mode ignores passes and yields 10 evenly
/// strided windows of S consecutive frames.
inline std::vector<std::vector<int>> sample_indices(int frames, const SamplerConfig& cfg,
                                                    std::uint64_t seed) {
  std::vector<std::vector<int>> out;
  if (cfg.mode == SampleMode::Dense) {
    const int windows = 10;
    const int span = frames > cfg.segments ? frames - cfg.segments : 0;
    for (int j = 0; j < windows; ++j) {
      const int start = windows > 1 ? static_cast<int>(
                            static_cast<long long>(j) * span / (windows - 1))
                                    : 0;
      std::vector<int> idx(cfg.segments);
      for (int i = 0; i < cfg.segments; ++i) idx[i] = std::min(start + i, frames - 1);
      out.push_back(std::move(idx));
    }
    return out;
  }
  if (cfg.passes < 1) throw std::invalid_argument("sampler: passes < 1");
  for (int p = 0; p < cfg.passes; ++p)
    out.push_back(sample_indices_once(frames, cfg.segments, cfg.mode, seed + p));
  return out;
}

}  // namespace mmtsm
