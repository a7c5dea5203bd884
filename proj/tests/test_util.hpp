#pragma once

#include <filesystem>
#include <random>
#include <string>

#include "mmtsm/core/tensor.hpp"

namespace mmtsm::testutil {

inline TensorR rand_tensor(std::vector<int> shape, std::uint64_t seed, Real lo = -1.0,
                           Real hi = 1.0) {
  TensorR t(std::move(shape));
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<Real> d(lo, hi);
  for (std::size_t i = 0; i < t.numel(); ++i) t[i] = d(rng);
  return t;
}

/// Scratch directory removed on scope exit.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    auto base = std::filesystem::temp_directory_path();
    std::mt19937_64 rng(std::random_device{}());
    for (int tries = 0; tries < 64; ++tries) {
      auto p = base / (tag + "_" + std::to_string(rng()));
      std::error_code ec;
      if (std::filesystem::create_directory(p, ec)) {
        path_ = p;
        return;
      }
    }
    throw std::runtime_error("TempDir: could not create a scratch directory");
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::string str() const { return path_.string(); }
  std::string sub(const std::string& name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

}  // namespace mmtsm::testutil
