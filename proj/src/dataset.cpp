#include "mmtsm/data/dataset.hpp"

#include <nlohmann/json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <stdexcept>

namespace fs = std::filesystem;
using nlohmann::json;

namespace mmtsm {

std::string frame_file_name(int n, const std::string& ext) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "img_%05d.", n);
  return std::string(buf) + ext;
}

namespace {

/// Count the contiguous run img_00001..img_N in dir and detect the extension.
std::pair<int, std::string> scan_frames(const fs::path& dir) {
  std::string ext;
  for (const char* cand : {"png", "jpg", "jpeg"}) {
    if (fs::exists(dir / frame_file_name(1, cand))) {
      ext = cand;
      break;
    }
  }
  if (ext.empty()) return {0, ""};
  int n = 1;
  while (fs::exists(dir / frame_file_name(n + 1, ext))) ++n;
  return {n, ext};
}

}  // namespace

DatasetIndex load_index(const std::string& root, const std::string& split) {
  const fs::path index_path = fs::path(root) / "index.json";
  std::ifstream f(index_path);
  if (!f) throw std::runtime_error("dataset: missing index file " + index_path.string());

  json j;
  try {
    f >> j;
  } catch (const json::exception& e) {
    throw std::runtime_error("dataset: malformed index.json: " + std::string(e.what()));
  }

  DatasetIndex index;
  index.root = root;
  index.split = split;
  if (!j.contains("classes") || !j["classes"].is_array() || j["classes"].empty())
    throw std::runtime_error("dataset: index.json lacks a non-empty 'classes' array");
  for (const auto& c : j["classes"]) index.classes.push_back(c.get<std::string>());
  const int k = index.num_classes();

  if (!j.contains("clips") || !j["clips"].is_array())
    throw std::runtime_error("dataset: index.json lacks a 'clips' array");

  std::set<std::string> seen;
  for (const auto& jc : j["clips"]) {
    MultimodalClip clip;
    clip.id = jc.at("id").get<std::string>();
    clip.label = jc.at("label").get<int>();
    clip.frames = jc.at("frames").get<int>();
    if (!seen.insert(clip.id).second)
      throw std::runtime_error("dataset: duplicate clip id '" + clip.id + "'");
    if (clip.label < 0 || clip.label >= k)
      throw std::runtime_error("dataset: clip '" + clip.id + "' label " +
                               std::to_string(clip.label) + " outside [0, " +
                               std::to_string(k) + ")");
    if (clip.frames < 1)
      throw std::runtime_error("dataset: clip '" + clip.id + "' has no frames");

    const auto& mods = jc.at("modalities");
    int longest = 0;
    for (int m = 0; m < kModalities; ++m) {
      const char* name = modality_name(static_cast<ModalityKind>(m));
      if (!mods.contains(name))
        throw std::runtime_error("dataset: clip '" + clip.id + "' lacks modality '" +
                                 name + "'");
      clip.dirs[m] = mods.at(name).get<std::string>();
      auto [count, ext] = scan_frames(fs::path(root) / clip.dirs[m]);
      if (count == 0)
        throw std::runtime_error("dataset: clip '" + clip.id + "' has no frames for '" +
                                 name + "' under " + clip.dirs[m]);
      if (count > clip.frames)
        throw std::runtime_error("dataset: clip '" + clip.id + "' modality '" + name +
                                 "' has " + std::to_string(count) +
                                 " frames, more than declared " +
                                 std::to_string(clip.frames));
      clip.counts[m] = count;
      clip.exts[m] = ext;
      longest = std::max(longest, count);
    }
    if (longest != clip.frames)
      throw std::runtime_error("dataset: clip '" + clip.id + "' declares " +
                               std::to_string(clip.frames) + " frames but longest modality has " +
                               std::to_string(longest));
    index.clips.push_back(std::move(clip));
  }
  return index;
}

ClipFrames read_clip(const DatasetIndex& index, const MultimodalClip& clip) {
  ClipFrames out;
  for (int m = 0; m < kModalities; ++m) {
    const fs::path dir = fs::path(index.root) / clip.dirs[m];
    if (clip.exts[m] != "png")
      throw std::runtime_error("dataset: clip '" + clip.id + "' modality '" +
                               modality_name(static_cast<ModalityKind>(m)) +
                               "' uses ." + clip.exts[m] +
                               " frames; this build decodes PNG only");
    std::vector<Image> native;
    native.reserve(clip.counts[m]);
    for (int n = 1; n <= clip.counts[m]; ++n)
      native.push_back(read_png((dir / frame_file_name(n, clip.exts[m])).string()));

    auto& seq = out.modality[m];
    seq.reserve(clip.frames);
    if (clip.counts[m] == clip.frames) {
      seq = std::move(native);
    } else {
      for (int i = 0; i < clip.frames; ++i)
        seq.push_back(native[stretch_index(i, clip.counts[m], clip.frames)]);
    }
  }
  return out;
}

}  // namespace mmtsm
