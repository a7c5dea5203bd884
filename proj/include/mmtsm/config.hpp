#pragma once

#include <nlohmann/json.hpp>

#include <cstdint>
#include <string>
#include <vector>

#include "mmtsm/model/fusion.hpp"
#include "mmtsm/model/tsm_model.hpp"
#include "mmtsm/pipeline/augment.hpp"

namespace mmtsm {

struct TrainSettings {
  int epochs = 30;
  int batch_size = 6;
  Real lr = 0.01;
  Real momentum = 0.9;
  Real weight_decay = 5e-4;
  Real clip_norm = 20.0;
  std::vector<int> milestones;  // resolved; empty input means epochs/3 and 5*epochs/6
  Real lr_factor = 0.1;
  FusionWeights fusion;
  Real val_fraction = 0.1;
  bool checkpoint_every_epoch = true;
  std::string pretrained;
};

struct EvalSettings {
  int passes = 1;
  bool dense = false;
  bool tta_flip = false;
  int crop_size = 224;
  int scale_target = 256;
  int segments = 0;  // 0 = sampler.segments
  FusionWeights fusion;
  std::string split = "val";
};

/// Experiment configuration: a JSON tree validated against the default
/// schema. The canonical serialization (sorted keys, no whitespace) feeds
/// the run hash; the model hash covers only shape-determining fields so
/// checkpoints survive eval-side option changes.
class ExperimentConfig {
 public:
  ExperimentConfig();  // defaults

  static ExperimentConfig from_file(const std::string& path,
                                    const std::vector<std::string>& overrides = {});
  static ExperimentConfig from_overrides(const std::vector<std::string>& overrides);
  static ExperimentConfig from_json_text(const std::string& text,
                                         const std::vector<std::string>& overrides = {});

  const nlohmann::json& tree() const { return tree_; }

  std::uint64_t seed() const;
  std::string dataset_root() const;
  int channel_policy() const;
  int segments() const;

  AugmentConfig train_augment() const;
  AugmentConfig eval_augment() const;
  ModelConfig model_config() const;  // classes filled by caller
  TrainSettings train() const;
  EvalSettings eval() const;

  std::string canonical() const;
  std::uint64_t run_hash() const;
  std::uint64_t model_hash(int classes) const;

  void apply_override(const std::string& keyval);
  void set(const std::string& dotted, const nlohmann::json& value);  // validated

  std::string dump_pretty() const;

 private:
  nlohmann::json tree_;
};

FusionWeights fusion_from_json(const nlohmann::json& j);

}  // namespace mmtsm
