#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace mmtsm {

struct SyntheticSpec {
  int n_clips = 30;
  int classes = 3;
  int frames = 16;
  int size = 64;
  std::uint64_t seed = 7;
  bool depth_noise_only = false;
};

/// Class motion patterns: each class orbits the same T circle positions at a
/// distinct speed, so single frames carry no class signal and a horizontal
/// flip (direction reversal) keeps a clip inside its class. Returned
/// sequences are permutations of [0, T), pairwise distinct under cyclic
/// offset even when one of the pair is reversed.
std::vector<std::vector<int>> synthetic_patterns(int classes, int frames);

/// Write a synthetic multimodal dataset under root: index.json plus one
/// directory per clip per modality of PNG frames. Deterministic in spec.seed.
void gen_synthetic(const std::string& root, const SyntheticSpec& spec);

}  // namespace mmtsm
