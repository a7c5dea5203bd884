#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>

#include "mmtsm/data/dataset.hpp"
#include "mmtsm/data/image.hpp"
#include "mmtsm/data/synthetic.hpp"
#include "test_util.hpp"

using namespace mmtsm;
using testutil::TempDir;
namespace fs = std::filesystem;

namespace {

std::vector<std::uint8_t> file_bytes(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  REQUIRE(f.good());
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(f), {});
}

std::vector<int> rotated(const std::vector<int>& seq, int offset) {
  const int t = static_cast<int>(seq.size());
  std::vector<int> out(t);
  for (int i = 0; i < t; ++i) out[i] = (seq[(i + offset) % t]);
  return out;
}

std::vector<int> reversed_cycle(const std::vector<int>& seq) {
  // direction flip of an orbit: position at time t becomes T - pos mod T
  const int t = static_cast<int>(seq.size());
  std::vector<int> out(t);
  for (int i = 0; i < t; ++i) out[i] = (t - seq[i]) % t;
  return out;
}

}  // namespace

TEST_CASE("png encoding round-trips rgb and grayscale exactly") {
  for (int channels : {1, 3}) {
    Image img(9, 7, channels);
    std::mt19937_64 rng(channels);
    for (auto& px : img.data) px = static_cast<std::uint8_t>(rng() & 0xff);
    const auto bytes = encode_png(img);
    const Image back = decode_png(bytes.data(), bytes.size());
    CHECK(back.width == img.width);
    CHECK(back.height == img.height);
    CHECK(back.channels == img.channels);
    CHECK(back.data == img.data);
  }
}

TEST_CASE("png files survive a disk round trip") {
  TempDir dir("png");
  Image img(16, 16, 3);
  for (std::size_t i = 0; i < img.data.size(); ++i)
    img.data[i] = static_cast<std::uint8_t>(i * 37);
  const std::string path = dir.sub("img.png");
  write_png(path, img);
  const Image back = read_png(path);
  CHECK(back.data == img.data);
}

TEST_CASE("garbage bytes are rejected by the decoder") {
  const std::vector<std::uint8_t> junk = {'n', 'o', 't', ' ', 'a', ' ', 'p', 'n', 'g', '!'};
  CHECK_THROWS_AS(decode_png(junk.data(), junk.size()), std::runtime_error);
}

TEST_CASE("motion patterns are orbit permutations, distinct across classes") {
  for (auto [classes, frames] : std::vector<std::pair<int, int>>{{3, 16}, {8, 32}}) {
    const auto patterns = synthetic_patterns(classes, frames);
    REQUIRE(static_cast<int>(patterns.size()) == classes);
    for (const auto& seq : patterns) {
      REQUIRE(static_cast<int>(seq.size()) == frames);
      std::set<int> uniq(seq.begin(), seq.end());
      CHECK(static_cast<int>(uniq.size()) == frames);  // full orbit, same position set
      CHECK(*uniq.begin() == 0);
      CHECK(*uniq.rbegin() == frames - 1);
    }
    // no clip of class j (any start offset, either direction) can reproduce
    // the trajectory of class i
    for (int i = 0; i < classes; ++i) {
      for (int j = 0; j < classes; ++j) {
        if (i == j) continue;
        for (int off = 0; off < frames; ++off) {
          CHECK(patterns[i] != rotated(patterns[j], off));
          CHECK(patterns[i] != rotated(reversed_cycle(patterns[j]), off));
        }
      }
    }
  }
}

TEST_CASE("asking for more speeds than the frame count supports fails") {
  CHECK_THROWS_WITH_AS(synthetic_patterns(5, 16),
                       doctest::Contains("distinct motion speeds"), std::invalid_argument);
}

TEST_CASE("generator spec validation") {
  TempDir dir("genspec");
  SyntheticSpec spec;
  spec.classes = 1;
  CHECK_THROWS_AS(gen_synthetic(dir.sub("a"), spec), std::invalid_argument);
  spec = {};
  spec.frames = 4;
  CHECK_THROWS_AS(gen_synthetic(dir.sub("b"), spec), std::invalid_argument);
  spec = {};
  spec.size = 16;
  CHECK_THROWS_AS(gen_synthetic(dir.sub("c"), spec), std::invalid_argument);
  spec = {};
  spec.n_clips = 0;
  CHECK_THROWS_AS(gen_synthetic(dir.sub("d"), spec), std::invalid_argument);
}

TEST_CASE("generation is deterministic down to the bytes") {
  TempDir dir("gen2");
  SyntheticSpec spec;
  spec.n_clips = 4;
  spec.classes = 2;
  spec.frames = 8;
  spec.size = 32;
  spec.seed = 123;
  gen_synthetic(dir.sub("one"), spec);
  gen_synthetic(dir.sub("two"), spec);

  int files = 0;
  for (const auto& entry : fs::recursive_directory_iterator(dir.sub("one"))) {
    if (!entry.is_regular_file()) continue;
    const auto rel = fs::relative(entry.path(), dir.sub("one"));
    CHECK(file_bytes(entry.path()) == file_bytes(dir.path() / "two" / rel));
    ++files;
  }
  CHECK(files == 1 + 4 * 3 * 8);  // index plus every frame of every modality

  SyntheticSpec other = spec;
  other.seed = 124;
  gen_synthetic(dir.sub("three"), other);
  CHECK(file_bytes(dir.sub("one") + "/index.json") ==
        file_bytes(dir.sub("three") + "/index.json"));
  bool any_frame_differs = false;
  for (const auto& entry : fs::recursive_directory_iterator(dir.sub("one"))) {
    if (!entry.is_regular_file() || entry.path().extension() != ".png") continue;
    const auto rel = fs::relative(entry.path(), dir.sub("one"));
    if (file_bytes(entry.path()) != file_bytes(dir.path() / "three" / rel))
      any_frame_differs = true;
  }
  CHECK(any_frame_differs);
}

TEST_CASE("generated datasets load back with the declared layout") {
  TempDir dir("roundtrip");
  SyntheticSpec spec;
  spec.n_clips = 6;
  spec.classes = 3;
  spec.frames = 8;
  spec.size = 32;
  gen_synthetic(dir.str(), spec);

  const auto index = load_index(dir.str());
  CHECK(index.num_classes() == 3);
  REQUIRE(static_cast<int>(index.clips.size()) == 6);
  std::vector<int> per_class(3, 0);
  for (const auto& clip : index.clips) {
    ++per_class[clip.label];
    CHECK(clip.frames == 8);
    for (int m = 0; m < kModalities; ++m) {
      CHECK(clip.counts[m] == 8);
      CHECK(clip.exts[m] == "png");
    }
  }
  CHECK(per_class == std::vector<int>{2, 2, 2});

  const ClipFrames frames = read_clip(index, index.clips[0]);
  CHECK(frames.modality[0][0].channels == 3);  // rgb
  CHECK(frames.modality[1][0].channels == 1);  // tir
  CHECK(frames.modality[2][0].channels == 1);  // depth
  for (int m = 0; m < kModalities; ++m) {
    REQUIRE(static_cast<int>(frames.modality[m].size()) == 8);
    for (const auto& img : frames.modality[m]) {
      CHECK(img.width == 32);
      CHECK(img.height == 32);
    }
  }
}

TEST_CASE("the mean pixel of a clip carries no class signal") {
  // All classes traverse the same orbit positions, so a bag-of-pixels
  // summary should sit near chance under a nearest-centroid rule.
  TempDir dir("static");
  SyntheticSpec spec;
  spec.n_clips = 30;
  spec.classes = 3;
  spec.frames = 16;
  spec.size = 32;
  gen_synthetic(dir.str(), spec);
  const auto index = load_index(dir.str());

  std::vector<double> means;
  std::vector<int> labels;
  for (const auto& clip : index.clips) {
    const ClipFrames frames = read_clip(index, clip);
    double sum = 0;
    std::size_t count = 0;
    for (const auto& img : frames.modality[0]) {
      for (auto px : img.data) sum += px;
      count += img.data.size();
    }
    means.push_back(sum / count);
    labels.push_back(clip.label);
  }

  std::vector<double> centroid(3, 0);
  std::vector<int> total(3, 0);
  for (std::size_t i = 0; i < means.size(); ++i) {
    centroid[labels[i]] += means[i];
    ++total[labels[i]];
  }
  for (int c = 0; c < 3; ++c) centroid[c] /= total[c];

  int hits = 0;
  for (std::size_t i = 0; i < means.size(); ++i) {
    int best = 0;
    for (int c = 1; c < 3; ++c)
      if (std::abs(means[i] - centroid[c]) < std::abs(means[i] - centroid[best])) best = c;
    if (best == labels[i]) ++hits;
  }
  const double acc = static_cast<double>(hits) / means.size();
  CHECK(acc < 1.0 / 3.0 + 0.25);
}

TEST_CASE("loader failures name the offending clip and modality") {
  TempDir dir("badidx");
  CHECK_THROWS_WITH_AS(load_index(dir.sub("nowhere")), doctest::Contains("missing index file"),
                       std::runtime_error);

  {
    std::ofstream f(dir.sub("index.json"));
    f << "{ not json";
  }
  CHECK_THROWS_WITH_AS(load_index(dir.str()), doctest::Contains("malformed"),
                       std::runtime_error);

  // well-formed json, bad label
  {
    std::ofstream f(dir.sub("index.json"));
    f << R"({"classes":["a","b"],"clips":[{"id":"c0","label":5,"frames":2,)"
         R"("modalities":{"rgb":"c0/rgb","tir":"c0/tir","depth":"c0/depth"}}]})";
  }
  CHECK_THROWS_WITH_AS(load_index(dir.str()), doctest::Contains("label"), std::runtime_error);

  // valid label but nothing on disk
  {
    std::ofstream f(dir.sub("index.json"));
    f << R"({"classes":["a","b"],"clips":[{"id":"c0","label":0,"frames":2,)"
         R"("modalities":{"rgb":"c0/rgb","tir":"c0/tir","depth":"c0/depth"}}]})";
  }
  CHECK_THROWS_WITH_AS(load_index(dir.str()), doctest::Contains("no frames for 'rgb'"),
                       std::runtime_error);
}

TEST_CASE("non-png frames are detected and refused at read time") {
  TempDir dir("jpegclip");
  fs::create_directories(dir.sub("c0/rgb"));
  fs::create_directories(dir.sub("c0/tir"));
  fs::create_directories(dir.sub("c0/depth"));
  Image img(32, 32, 1);
  for (const char* mod : {"tir", "depth"})
    for (int n = 1; n <= 2; ++n)
      write_png(dir.sub(std::string("c0/") + mod + "/" + frame_file_name(n, "png")), img);
  for (int n = 1; n <= 2; ++n) {
    std::ofstream f(dir.sub("c0/rgb/" + frame_file_name(n, "jpg")), std::ios::binary);
    f << "\xff\xd8\xff";
  }
  {
    std::ofstream f(dir.sub("index.json"));
    f << R"({"classes":["a","b"],"clips":[{"id":"c0","label":0,"frames":2,)"
         R"("modalities":{"rgb":"c0/rgb","tir":"c0/tir","depth":"c0/depth"}}]})";
  }
  const auto index = load_index(dir.str());
  REQUIRE(index.clips.size() == 1);
  CHECK(index.clips[0].exts[0] == "jpg");
  CHECK_THROWS_WITH_AS(read_clip(index, index.clips[0]), doctest::Contains("PNG only"),
                       std::runtime_error);
}

TEST_CASE("shorter modalities are stretched over the aligned length") {
  CHECK(stretch_index(0, 4, 8) == 0);
  CHECK(stretch_index(7, 4, 8) == 3);
  for (int i = 0; i < 8; ++i) CHECK(stretch_index(i, 8, 8) == i);
  // monotone, covers the short sequence
  std::set<int> used;
  int prev = 0;
  for (int i = 0; i < 10; ++i) {
    const int s = stretch_index(i, 3, 10);
    CHECK(s >= prev);
    prev = s;
    used.insert(s);
  }
  CHECK(used == std::set<int>{0, 1, 2});
}
