#pragma once

#include <array>
#include <string>
#include <vector>

#include "mmtsm/data/image.hpp"

namespace mmtsm {

enum class ModalityKind { RGB = 0, TIR = 1, DEPTH = 2 };
constexpr int kModalities = 3;

inline const char* modality_name(ModalityKind m) {
  switch (m) {
    case ModalityKind::RGB: return "rgb";
    case ModalityKind::TIR: return "tir";
    default: return "depth";
  }
}

struct MultimodalClip {
  std::string id;
  int label = 0;
  int frames = 0;                            // aligned length T (longest modality)
  std::array<std::string, kModalities> dirs; // relative to dataset root
  std::array<int, kModalities> counts{};     // frames actually on disk per modality
  std::array<std::string, kModalities> exts; // frame file extension per modality
};

struct DatasetIndex {
  std::string root;
  std::vector<std::string> classes;
  std::vector<MultimodalClip> clips;
  std::string split = "train";

  int num_classes() const { return static_cast<int>(classes.size()); }
};

/// Decoded frames of one clip, aligned to length T across modalities.
struct ClipFrames {
  std::array<std::vector<Image>, kModalities> modality;
};

/// Parse and validate root/index.json. Every clip must provide all three
/// modalities with at least one frame; labels must be inside the class table.
DatasetIndex load_index(const std::string& root, const std::string& split = "train");

/// Nearest-index stretch of a shorter sequence onto length T.
inline int stretch_index(int i, int t_short, int t_full) {
  return static_cast<int>((static_cast<long long>(i) * t_short) / t_full);
}

/// Decode all frames of a clip; shorter modalities are stretched to T by
/// repeating frames via stretch_index.
ClipFrames read_clip(const DatasetIndex& index, const MultimodalClip& clip);

/// Frame file name for 1-based index n: img_%05d.<ext>.
std::string frame_file_name(int n, const std::string& ext);

}  // namespace mmtsm
