#include "mmtsm/model/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <map>
#include <stdexcept>
#include <vector>

namespace mmtsm {

namespace {

constexpr char kMagic[8] = {'M', 'M', 'T', 'S', 'M', 'C', 'K', '1'};
constexpr std::uint32_t kVersion = 1;

void write_u32(std::ostream& os, std::uint32_t v) {
  os.write(reinterpret_cast<const char*>(&v), 4);
}
void write_u64(std::ostream& os, std::uint64_t v) {
  os.write(reinterpret_cast<const char*>(&v), 8);
}
void write_f64(std::ostream& os, double v) {
  os.write(reinterpret_cast<const char*>(&v), 8);
}
void write_string(std::ostream& os, const std::string& s) {
  write_u32(os, static_cast<std::uint32_t>(s.size()));
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::uint32_t read_u32(std::istream& is) {
  std::uint32_t v;
  is.read(reinterpret_cast<char*>(&v), 4);
  return v;
}
std::uint64_t read_u64(std::istream& is) {
  std::uint64_t v;
  is.read(reinterpret_cast<char*>(&v), 8);
  return v;
}
double read_f64(std::istream& is) {
  double v;
  is.read(reinterpret_cast<char*>(&v), 8);
  return v;
}
std::string read_string(std::istream& is) {
  const std::uint32_t n = read_u32(is);
  if (n > (1u << 24)) throw std::runtime_error("checkpoint: absurd string length");
  std::string s(n, '\0');
  is.read(s.data(), n);
  return s;
}

using StoredArray = CheckpointArray;

CheckpointMeta read_header(std::istream& is, const std::string& path) {
  char magic[8];
  is.read(magic, 8);
  if (!is || std::memcmp(magic, kMagic, 8) != 0)
    throw std::runtime_error("checkpoint: bad magic in " + path);
  const std::uint32_t version = read_u32(is);
  if (version != kVersion)
    throw std::runtime_error("checkpoint: unsupported version " + std::to_string(version) +
                             " in " + path);
  CheckpointMeta meta;
  meta.model_hash = read_u64(is);
  meta.epoch = static_cast<int>(read_u32(is));
  meta.score = read_f64(is);
  meta.config_json = read_string(is);
  return meta;
}

std::vector<StoredArray> read_arrays(std::istream& is, const std::string& path) {
  const std::uint32_t count = read_u32(is);
  std::vector<StoredArray> arrays(count);
  for (auto& a : arrays) {
    a.name = read_string(is);
    a.is_buffer = is.get() != 0;
    const std::uint32_t rank = read_u32(is);
    if (rank > 8) throw std::runtime_error("checkpoint: absurd rank in " + path);
    std::size_t numel = 1;
    a.shape.resize(rank);
    for (auto& d : a.shape) {
      d = static_cast<int>(read_u32(is));
      numel *= static_cast<std::size_t>(d);
    }
    a.data.resize(numel);
    is.read(reinterpret_cast<char*>(a.data.data()),
            static_cast<std::streamsize>(numel * sizeof(double)));
    if (!is) throw std::runtime_error("checkpoint: truncated array data in " + path);
  }
  return arrays;
}

std::string shape_str(const std::vector<int>& s) {
  std::string r = "[";
  for (std::size_t i = 0; i < s.size(); ++i) r += (i ? "," : "") + std::to_string(s[i]);
  return r + "]";
}

}  // namespace

void save_checkpoint(const std::string& path, const ParamRefs& params,
                     const CheckpointMeta& meta) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("checkpoint: cannot open for write: " + path);
  os.write(kMagic, 8);
  write_u32(os, kVersion);
  write_u64(os, meta.model_hash);
  write_u32(os, static_cast<std::uint32_t>(meta.epoch));
  write_f64(os, meta.score);
  write_string(os, meta.config_json);
  write_u32(os, static_cast<std::uint32_t>(params.size()));
  for (const auto& p : params) {
    write_string(os, p.name);
    os.put(p.grad ? 0 : 1);  // buffers carry no gradient
    const auto& shape = p.value->shape();
    write_u32(os, static_cast<std::uint32_t>(shape.size()));
    for (int d : shape) write_u32(os, static_cast<std::uint32_t>(d));
    os.write(reinterpret_cast<const char*>(p.value->data()),
             static_cast<std::streamsize>(p.value->numel() * sizeof(double)));
  }
  if (!os) throw std::runtime_error("checkpoint: write failed: " + path);
}

CheckpointContent read_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("checkpoint: cannot open " + path);
  CheckpointContent content;
  content.meta = read_header(is, path);
  content.arrays = read_arrays(is, path);
  return content;
}

CheckpointMeta read_checkpoint_meta(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("checkpoint: cannot open: " + path);
  return read_header(is, path);
}

CheckpointMeta load_checkpoint(const std::string& path, ParamRefs& params,
                               std::uint64_t expect_hash) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("checkpoint: cannot open: " + path);
  CheckpointMeta meta = read_header(is, path);
  if (meta.model_hash != expect_hash)
    throw std::runtime_error(
        "checkpoint: model hash mismatch for " + path + ": file has " +
        std::to_string(meta.model_hash) + ", current config needs " +
        std::to_string(expect_hash) +
        " (architecture, width, channels or class count differ; refusing to load)");

  auto arrays = read_arrays(is, path);
  std::map<std::string, const StoredArray*> by_name;
  for (const auto& a : arrays) by_name[a.name] = &a;

  for (auto& p : params) {
    auto it = by_name.find(p.name);
    if (it == by_name.end())
      throw std::runtime_error("checkpoint: " + path + " lacks array '" + p.name + "'");
    const StoredArray& a = *it->second;
    if (a.shape != p.value->shape())
      throw std::runtime_error("checkpoint: shape mismatch for '" + p.name + "': file " +
                               shape_str(a.shape) + " vs model " + p.value->shape_str());
    std::memcpy(p.value->data(), a.data.data(), a.data.size() * sizeof(double));
  }
  return meta;
}

PretrainedLoadReport load_pretrained_backbone(const std::string& path, ParamRefs& params) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("checkpoint: cannot open: " + path);
  read_header(is, path);  // external hash intentionally ignored
  auto arrays = read_arrays(is, path);
  std::map<std::string, const StoredArray*> by_name;
  for (const auto& a : arrays) by_name[a.name] = &a;

  PretrainedLoadReport report;
  for (auto& p : params) {
    if (p.name.rfind("backbone.", 0) != 0) {
      ++report.fresh;
      continue;
    }
    auto it = by_name.find(p.name);
    if (it == by_name.end()) {
      ++report.skipped;
      continue;
    }
    const StoredArray& a = *it->second;
    if (a.shape == p.value->shape()) {
      std::memcpy(p.value->data(), a.data.data(), a.data.size() * sizeof(double));
      ++report.loaded;
      continue;
    }
    // Stem kernels may disagree only in input channels: [O, Cf, k, k] vs
    // [O, Cm, k, k]. Averaging (3->1) or replicating (1->3) keeps the
    // filter response scale for grayscale replicated inputs.
    const auto& ms = p.value->shape();
    if (a.shape.size() == 4 && ms.size() == 4 && a.shape[0] == ms[0] &&
        a.shape[2] == ms[2] && a.shape[3] == ms[3] && a.shape[1] != ms[1] &&
        (a.shape[1] == 1 || ms[1] == 1)) {
      const int o = ms[0], cf = a.shape[1], cm = ms[1], kk = ms[2] * ms[3];
      auto& dst = *p.value;
      for (int i = 0; i < o; ++i)
        for (int j = 0; j < kk; ++j) {
          if (cm == 1) {  // average file channels
            double sum = 0;
            for (int c = 0; c < cf; ++c) sum += a.data[(i * cf + c) * kk + j];
            dst[static_cast<std::size_t>(i) * kk + j] = sum / cf;
          } else {  // replicate the single file channel
            for (int c = 0; c < cm; ++c)
              dst[(static_cast<std::size_t>(i) * cm + c) * kk + j] = a.data[i * kk + j];
          }
        }
      ++report.adapted;
      continue;
    }
    ++report.skipped;
  }
  return report;
}

}  // namespace mmtsm
