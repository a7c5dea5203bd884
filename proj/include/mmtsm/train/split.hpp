#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "mmtsm/core/rng.hpp"
#include "mmtsm/data/dataset.hpp"

namespace mmtsm {

struct DataSplit {
  std::vector<int> train;  // clip indices into DatasetIndex::clips
  std::vector<int> val;
};

/// Stratified split: per class, shuffle that class's clips with a
/// seed-derived engine and move a fraction (at least one clip when the
/// fraction is positive) into the validation set.
inline DataSplit stratified_split(const DatasetIndex& index, double val_fraction,
                                  std::uint64_t seed) {
  DataSplit split;
  const int k = index.num_classes();
  std::vector<std::vector<int>> by_class(k);
  for (int i = 0; i < static_cast<int>(index.clips.size()); ++i)
    by_class[index.clips[i].label].push_back(i);

  for (int c = 0; c < k; ++c) {
    auto& group = by_class[c];
    auto rng = make_engine(mix_seed({seed, 0x73706c69u, static_cast<std::uint64_t>(c)}));
    std::shuffle(group.begin(), group.end(), rng);
    int n_val = 0;
    if (val_fraction > 0 && !group.empty()) {
      n_val = static_cast<int>(std::floor(val_fraction * group.size() + 1e-9));
      n_val = std::max(1, std::min(n_val, static_cast<int>(group.size())));
    }
    for (int i = 0; i < static_cast<int>(group.size()); ++i)
      (i < n_val ? split.val : split.train).push_back(group[i]);
  }
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.val.begin(), split.val.end());
  return split;
}

}  // namespace mmtsm
