#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace mmtsm {

/// 8-bit image, HWC row-major. channels is 1 (gray) or 3 (RGB).
struct Image {
  int width = 0;
  int height = 0;
  int channels = 0;
  std::vector<std::uint8_t> data;

  Image() = default;
  Image(int w, int h, int c)
      : width(w), height(h), channels(c),
        data(static_cast<std::size_t>(w) * h * c, 0) {}

  std::uint8_t& at(int y, int x, int c) {
    return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
  std::uint8_t at(int y, int x, int c) const {
    return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
};

/// Minimal PNG support: 8-bit grayscale and RGB, no interlace, no palette.
std::vector<std::uint8_t> encode_png(const Image& img);
Image decode_png(const std::uint8_t* bytes, std::size_t len);

void write_png(const std::string& path, const Image& img);
Image read_png(const std::string& path);

}  // namespace mmtsm
