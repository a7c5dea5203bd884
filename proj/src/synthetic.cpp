#include "mmtsm/data/synthetic.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "mmtsm/core/rng.hpp"
#include "mmtsm/data/dataset.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace mmtsm {

/// Per-class orbit strides. Each class circles the same T positions at its
/// own angular speed, so every clip of every class visits the identical
/// position set and only frame-to-frame displacement separates the labels.
/// Strides stay below T/2 and the direction sign is randomized per clip;
/// both keep a horizontally flipped clip inside its own class.
std::vector<int> synthetic_strides(int classes, int frames) {
  std::vector<int> pool;
  for (int s = 1; s <= frames / 2; ++s)
    if (std::gcd(s, frames) == 1) pool.push_back(s);
  if (static_cast<int>(pool.size()) < classes)
    throw std::invalid_argument("synthetic: only " + std::to_string(pool.size()) +
                                " distinct motion speeds exist for T=" +
                                std::to_string(frames) + ", need " +
                                std::to_string(classes));
  pool.resize(classes);
  return pool;
}

std::vector<std::vector<int>> synthetic_patterns(int classes, int frames) {
  const auto strides = synthetic_strides(classes, frames);
  std::vector<std::vector<int>> seqs;
  for (int s : strides) {
    std::vector<int> seq(frames);
    for (int t = 0; t < frames; ++t)
      seq[t] = static_cast<int>((static_cast<long long>(s) * t) % frames);
    seqs.push_back(std::move(seq));
  }
  return seqs;
}

namespace {

struct ModalityStyle {
  int channels;
  std::array<int, 3> background;
  std::array<int, 3> square;
  double phase;
};

/// Static plaid texture shared by every class and clip; it gives the frames
/// realistic spatial statistics without carrying any label information.
int textured_background(int base, int y, int x, int size, double phase) {
  const double fx = 2.0 * M_PI * 3.0 * x / size;
  const double fy = 2.0 * M_PI * 2.0 * y / size;
  const double tex = std::sin(fx + phase) * std::cos(fy - phase) +
                     0.5 * std::sin(fx * 0.5 + fy + 2.0 * phase);
  return std::clamp(base + static_cast<int>(std::lround(18.0 * tex)), 0, 255);
}

Image render_frame(int size, int frames, int pos_index, const ModalityStyle& style,
                   bool draw_square, std::mt19937_64& noise_rng) {
  Image img(size, size, style.channels);
  for (auto& v : img.data) v = 0;
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x)
      for (int c = 0; c < style.channels; ++c)
        img.at(y, x, c) = static_cast<std::uint8_t>(
            textured_background(style.background[c], y, x, size, style.phase + c));

  if (draw_square) {
    // Big square on a moderate orbit: the slowest class keeps most of the
    // square overlapping between consecutive frames, the middle class a
    // sliver, the fast classes none, so frame-to-frame coincidence grades
    // the speeds.
    const double angle = 2.0 * M_PI * pos_index / frames;
    const double radius = size * 7.0 / 32.0;
    const double cx = size / 2.0 + radius * std::cos(angle);
    const double cy = size / 2.0 + radius * std::sin(angle);
    const int side = (5 * size) / 16;
    const int x0 = static_cast<int>(std::lround(cx - side / 2.0));
    const int y0 = static_cast<int>(std::lround(cy - side / 2.0));
    for (int y = y0; y < y0 + side; ++y)
      for (int x = x0; x < x0 + side; ++x)
        for (int c = 0; c < style.channels; ++c)
          img.at(y, x, c) = static_cast<std::uint8_t>(style.square[c]);
  }

  std::uniform_int_distribution<int> noise(-12, 12);
  for (auto& v : img.data) {
    const int nv = static_cast<int>(v) + noise(noise_rng);
    v = static_cast<std::uint8_t>(std::clamp(nv, 0, 255));
  }
  return img;
}

}  // namespace

void gen_synthetic(const std::string& root, const SyntheticSpec& spec) {
  if (spec.classes < 2 || spec.classes > 8)
    throw std::invalid_argument("synthetic: classes must be in [2, 8]");
  if (spec.frames < 8) throw std::invalid_argument("synthetic: frames must be >= 8");
  if (spec.size < 32) throw std::invalid_argument("synthetic: size must be >= 32");
  if (spec.n_clips < 1) throw std::invalid_argument("synthetic: need at least one clip");

  const auto patterns = synthetic_patterns(spec.classes, spec.frames);

  const ModalityStyle styles[kModalities] = {
      {3, {70, 74, 82}, {210, 170, 120}, 0.0},  // rgb
      {1, {80, 0, 0}, {220, 0, 0}, 1.3},        // tir
      {1, {150, 0, 0}, {70, 0, 0}, 2.6},        // depth
  };

  std::error_code ec;
  fs::create_directories(root, ec);
  if (ec) throw std::runtime_error("synthetic: cannot create " + root + ": " + ec.message());

  json clips_json = json::array();
  for (int i = 0; i < spec.n_clips; ++i) {
    const int label = i % spec.classes;
    char idbuf[16];
    std::snprintf(idbuf, sizeof(idbuf), "clip_%04d", i);
    const std::string id = idbuf;

    auto offset_rng = make_engine(mix_seed({spec.seed, 0x6f666673u, static_cast<std::uint64_t>(i)}));
    const int offset = static_cast<int>(offset_rng() % static_cast<std::uint64_t>(spec.frames));
    const bool reverse = (offset_rng() & 1u) != 0;

    json mods;
    for (int m = 0; m < kModalities; ++m) {
      const std::string sub = id + "/" + modality_name(static_cast<ModalityKind>(m));
      const fs::path dir = fs::path(root) / sub;
      fs::create_directories(dir, ec);
      if (ec)
        throw std::runtime_error("synthetic: cannot create " + dir.string() + ": " +
                                 ec.message());
      const bool draw = !(spec.depth_noise_only && m == static_cast<int>(ModalityKind::DEPTH));
      for (int t = 0; t < spec.frames; ++t) {
        const int step = patterns[label][t];
        const int pos = (offset + (reverse ? spec.frames - step : step)) % spec.frames;
        auto noise_rng = make_engine(mix_seed({spec.seed, 0x6672616du,
                                               static_cast<std::uint64_t>(i),
                                               static_cast<std::uint64_t>(m),
                                               static_cast<std::uint64_t>(t)}));
        Image frame = render_frame(spec.size, spec.frames, pos, styles[m], draw, noise_rng);
        write_png((dir / frame_file_name(t + 1, "png")).string(), frame);
      }
      mods[modality_name(static_cast<ModalityKind>(m))] = sub;
    }

    clips_json.push_back({{"id", id},
                          {"label", label},
                          {"frames", spec.frames},
                          {"modalities", mods}});
  }

  json classes_json = json::array();
  for (int c = 0; c < spec.classes; ++c) classes_json.push_back("class_" + std::to_string(c));

  json index = {{"classes", classes_json}, {"clips", clips_json}};
  std::ofstream f(fs::path(root) / "index.json", std::ios::trunc);
  if (!f) throw std::runtime_error("synthetic: cannot write index.json under " + root);
  f << index.dump(2) << "\n";
}

}  // namespace mmtsm
