#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mmtsm/nn/common.hpp"

namespace mmtsm {

struct CheckpointMeta {
  std::uint64_t model_hash = 0;
  int epoch = 0;
  Real score = 0;
  std::string config_json;  // canonical model + augment sections, self-describing
};

/// Binary container: magic, version, model hash, epoch, score, embedded
/// config JSON, then named f64 arrays (parameters and normalization
/// buffers). Little-endian, byte-stable for fixed content.
void save_checkpoint(const std::string& path, const ParamRefs& params,
                     const CheckpointMeta& meta);

/// Header only; cheap.
CheckpointMeta read_checkpoint_meta(const std::string& path);

struct CheckpointArray {
  std::string name;
  bool is_buffer = false;
  std::vector<int> shape;
  std::vector<double> data;
};

struct CheckpointContent {
  CheckpointMeta meta;
  std::vector<CheckpointArray> arrays;
};

/// Full decode without a model: header plus every named array.
CheckpointContent read_checkpoint(const std::string& path);

/// Load every named array into the matching model tensor. Refuses on model
/// hash mismatch (shape-incompatible checkpoints) or on name/shape drift.
CheckpointMeta load_checkpoint(const std::string& path, ParamRefs& params,
                               std::uint64_t expect_hash);

struct PretrainedLoadReport {
  int loaded = 0;
  int adapted = 0;
  int skipped = 0;
  int fresh = 0;
};

/// Lenient loader for an external backbone file: copies arrays whose name
/// and shape match, adapts a stem conv whose input channel count differs
/// (averaging or replicating kernels), leaves everything else (the head in
/// particular) at its current initialization.
PretrainedLoadReport load_pretrained_backbone(const std::string& path, ParamRefs& params);

}  // namespace mmtsm
