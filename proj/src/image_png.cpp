#include "mmtsm/data/image.hpp"

#include <zlib.h>

#include <cstring>
#include <fstream>
#include <stdexcept>

namespace mmtsm {

namespace {

constexpr std::uint8_t kSignature[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 24));
  out.push_back(static_cast<std::uint8_t>(v >> 16));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}

std::uint32_t get_u32(const std::uint8_t* p) {
  return (std::uint32_t(p[0]) << 24) | (std::uint32_t(p[1]) << 16) |
         (std::uint32_t(p[2]) << 8) | std::uint32_t(p[3]);
}

void put_chunk(std::vector<std::uint8_t>& out, const char type[4],
               const std::uint8_t* data, std::size_t len) {
  put_u32(out, static_cast<std::uint32_t>(len));
  const std::size_t start = out.size();
  out.insert(out.end(), type, type + 4);
  if (len) out.insert(out.end(), data, data + len);
  std::uint32_t crc = crc32(0L, Z_NULL, 0);
  crc = crc32(crc, out.data() + start, static_cast<uInt>(4 + len));
  put_u32(out, crc);
}

int paeth(int a, int b, int c) {
  const int p = a + b - c;
  const int pa = std::abs(p - a), pb = std::abs(p - b), pc = std::abs(p - c);
  if (pa <= pb && pa <= pc) return a;
  if (pb <= pc) return b;
  return c;
}

}  // namespace

std::vector<std::uint8_t> encode_png(const Image& img) {
  if (img.channels != 1 && img.channels != 3)
    throw std::invalid_argument("png: unsupported channel count " +
                                std::to_string(img.channels));
  if (img.width <= 0 || img.height <= 0) throw std::invalid_argument("png: empty image");

  const std::size_t stride = static_cast<std::size_t>(img.width) * img.channels;
  std::vector<std::uint8_t> raw;
  raw.reserve((stride + 1) * img.height);
  for (int y = 0; y < img.height; ++y) {
    raw.push_back(0);  // filter type none
    const std::uint8_t* row = img.data.data() + y * stride;
    raw.insert(raw.end(), row, row + stride);
  }

  uLongf bound = compressBound(static_cast<uLong>(raw.size()));
  std::vector<std::uint8_t> compressed(bound);
  if (compress2(compressed.data(), &bound, raw.data(), static_cast<uLong>(raw.size()), 6) !=
      Z_OK)
    throw std::runtime_error("png: deflate failed");
  compressed.resize(bound);

  std::vector<std::uint8_t> out(kSignature, kSignature + 8);
  std::uint8_t ihdr[13];
  ihdr[0] = static_cast<std::uint8_t>(img.width >> 24);
  ihdr[1] = static_cast<std::uint8_t>(img.width >> 16);
  ihdr[2] = static_cast<std::uint8_t>(img.width >> 8);
  ihdr[3] = static_cast<std::uint8_t>(img.width);
  ihdr[4] = static_cast<std::uint8_t>(img.height >> 24);
  ihdr[5] = static_cast<std::uint8_t>(img.height >> 16);
  ihdr[6] = static_cast<std::uint8_t>(img.height >> 8);
  ihdr[7] = static_cast<std::uint8_t>(img.height);
  ihdr[8] = 8;                                    // bit depth
  ihdr[9] = img.channels == 1 ? 0 : 2;            // gray / truecolor
  ihdr[10] = ihdr[11] = ihdr[12] = 0;             // deflate, adaptive, no interlace
  put_chunk(out, "IHDR", ihdr, sizeof(ihdr));
  put_chunk(out, "IDAT", compressed.data(), compressed.size());
  put_chunk(out, "IEND", nullptr, 0);
  return out;
}

Image decode_png(const std::uint8_t* bytes, std::size_t len) {
  if (len < 8 || std::memcmp(bytes, kSignature, 8) != 0)
    throw std::runtime_error("png: bad signature");

  int width = 0, height = 0, channels = 0;
  std::vector<std::uint8_t> idat;
  bool saw_ihdr = false, saw_iend = false;
  std::size_t pos = 8;
  while (pos + 12 <= len && !saw_iend) {
    const std::uint32_t clen = get_u32(bytes + pos);
    if (pos + 12 + clen > len) throw std::runtime_error("png: truncated chunk");
    const char* type = reinterpret_cast<const char*>(bytes + pos + 4);
    const std::uint8_t* data = bytes + pos + 8;
    if (std::memcmp(type, "IHDR", 4) == 0) {
      if (clen != 13) throw std::runtime_error("png: bad IHDR");
      width = static_cast<int>(get_u32(data));
      height = static_cast<int>(get_u32(data + 4));
      const int depth = data[8], color = data[9], interlace = data[12];
      if (depth != 8) throw std::runtime_error("png: unsupported bit depth");
      if (color == 0) channels = 1;
      else if (color == 2) channels = 3;
      else throw std::runtime_error("png: unsupported color type");
      if (interlace != 0) throw std::runtime_error("png: interlaced images unsupported");
      saw_ihdr = true;
    } else if (std::memcmp(type, "IDAT", 4) == 0) {
      idat.insert(idat.end(), data, data + clen);
    } else if (std::memcmp(type, "IEND", 4) == 0) {
      saw_iend = true;
    }
    pos += 12 + clen;
  }
  if (!saw_ihdr || width <= 0 || height <= 0) throw std::runtime_error("png: missing IHDR");
  if (idat.empty()) throw std::runtime_error("png: missing IDAT");

  const std::size_t stride = static_cast<std::size_t>(width) * channels;
  std::vector<std::uint8_t> raw((stride + 1) * height);
  uLongf raw_len = static_cast<uLongf>(raw.size());
  if (uncompress(raw.data(), &raw_len, idat.data(), static_cast<uLong>(idat.size())) != Z_OK ||
      raw_len != raw.size())
    throw std::runtime_error("png: inflate failed");

  Image img(width, height, channels);
  const int bpp = channels;
  std::vector<std::uint8_t> prev(stride, 0);
  for (int y = 0; y < height; ++y) {
    const std::uint8_t filter = raw[y * (stride + 1)];
    const std::uint8_t* src = raw.data() + y * (stride + 1) + 1;
    std::uint8_t* dst = img.data.data() + y * stride;
    for (std::size_t i = 0; i < stride; ++i) {
      const int a = i >= static_cast<std::size_t>(bpp) ? dst[i - bpp] : 0;
      const int b = prev[i];
      const int c = i >= static_cast<std::size_t>(bpp) ? prev[i - bpp] : 0;
      int v = src[i];
      switch (filter) {
        case 0: break;
        case 1: v += a; break;
        case 2: v += b; break;
        case 3: v += (a + b) / 2; break;
        case 4: v += paeth(a, b, c); break;
        default: throw std::runtime_error("png: bad filter type");
      }
      dst[i] = static_cast<std::uint8_t>(v & 0xff);
    }
    std::memcpy(prev.data(), dst, stride);
  }
  return img;
}

void write_png(const std::string& path, const Image& img) {
  const auto bytes = encode_png(img);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("png: cannot open for write: " + path);
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw std::runtime_error("png: write failed: " + path);
}

Image read_png(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("png: cannot open: " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                                  std::istreambuf_iterator<char>());
  try {
    return decode_png(bytes.data(), bytes.size());
  } catch (const std::exception& e) {
    throw std::runtime_error(std::string(e.what()) + " (" + path + ")");
  }
}

}  // namespace mmtsm
