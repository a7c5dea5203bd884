#include "mmtsm/config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "mmtsm/core/rng.hpp"
#include "mmtsm/data/dataset.hpp"

using nlohmann::json;

namespace mmtsm {

namespace {

json default_tree() {
  return json{
      {"seed", 7},
      {"dataset", {{"root", "data/synthetic"}, {"channel_policy", 3}}},
      {"sampler", {{"segments", 8}}},
      {"augment",
       {{"scales", {1.0, 0.875, 0.75, 0.66}},
        {"flip_prob", 0.5},
        {"crop_size", 224},
        {"mean", {0.5, 0.5, 0.5}},
        {"std", {0.5, 0.5, 0.5}}}},
      {"model",
       {{"preset", "deep-50"},
        {"width_mult", 1.0},
        {"input_channels", 3},
        {"shift_enabled", true},
        {"fold_divisor", 8}}},
      {"train",
       {{"epochs", 30},
        {"batch_size", 6},
        {"lr", 0.01},
        {"momentum", 0.9},
        {"weight_decay", 5e-4},
        {"clip_norm", 20.0},
        {"milestones", json::array()},
        {"lr_factor", 0.1},
        {"fusion", {{"gamma", 1.0}, {"beta", 1.0}, {"alpha", 0.2}}},
        {"val_fraction", 0.1},
        {"checkpoint_every_epoch", true},
        {"pretrained", ""}}},
      {"eval",
       {{"passes", 1},
        {"dense", false},
        {"tta_flip", false},
        {"crop_size", 224},
        {"scale_target", 256},
        {"segments", 0},
        {"fusion", {{"gamma", 1.0}, {"beta", 1.0}, {"alpha", 0.2}}},
        {"split", "val"}}},
  };
}

std::string sibling_list(const json& node) {
  std::string s;
  for (auto it = node.begin(); it != node.end(); ++it) {
    if (!s.empty()) s += ", ";
    s += it.key();
  }
  return s;
}

bool same_kind(const json& a, const json& b) {
  if (a.is_number() && b.is_number()) return true;
  if (a.is_array() && b.is_array()) return true;
  return a.type() == b.type();
}

/// Merge overlay into base, insisting every overlay key exists in base with
/// a compatible type. `where` names the path for error messages.
void merge_validated(json& base, const json& overlay, const std::string& where) {
  if (!overlay.is_object())
    throw std::invalid_argument("config: section '" + where + "' must be an object");
  for (auto it = overlay.begin(); it != overlay.end(); ++it) {
    const std::string path = where.empty() ? it.key() : where + "." + it.key();
    if (!base.contains(it.key()))
      throw std::invalid_argument("config: unknown key '" + path + "'; valid keys here: " +
                                  sibling_list(base));
    json& slot = base[it.key()];
    if (slot.is_object()) {
      merge_validated(slot, it.value(), path);
    } else {
      if (!same_kind(slot, it.value()))
        throw std::invalid_argument("config: key '" + path + "' expects " +
                                    std::string(slot.type_name()) + ", got " +
                                    std::string(it.value().type_name()));
      slot = it.value();
    }
  }
}

json parse_override_value(const std::string& text) {
  json v = json::parse(text, nullptr, false);
  if (!v.is_discarded()) return v;
  v = json::parse("[" + text + "]", nullptr, false);  // bare comma list
  if (!v.is_discarded() && v.is_array() && v.size() > 1) return v;
  return json(text);  // plain string
}

}  // namespace

FusionWeights fusion_from_json(const json& j) {
  FusionWeights w;
  w.gamma = j.at("gamma").get<Real>();
  w.beta = j.at("beta").get<Real>();
  w.alpha = j.at("alpha").get<Real>();
  w.validate();
  return w;
}

ExperimentConfig::ExperimentConfig() : tree_(default_tree()) {}

ExperimentConfig ExperimentConfig::from_file(const std::string& path,
                                             const std::vector<std::string>& overrides) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("config: cannot open " + path);
  json user;
  try {
    f >> user;
  } catch (const json::exception& e) {
    throw std::runtime_error("config: malformed JSON in " + path + ": " + e.what());
  }
  ExperimentConfig cfg;
  merge_validated(cfg.tree_, user, "");
  for (const auto& o : overrides) cfg.apply_override(o);
  return cfg;
}

ExperimentConfig ExperimentConfig::from_overrides(const std::vector<std::string>& overrides) {
  ExperimentConfig cfg;
  for (const auto& o : overrides) cfg.apply_override(o);
  return cfg;
}

ExperimentConfig ExperimentConfig::from_json_text(const std::string& text,
                                                  const std::vector<std::string>& overrides) {
  json user;
  try {
    user = json::parse(text);
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("config: malformed JSON text: ") + e.what());
  }
  ExperimentConfig cfg;
  merge_validated(cfg.tree_, user, "");
  for (const auto& o : overrides) cfg.apply_override(o);
  return cfg;
}

void ExperimentConfig::apply_override(const std::string& keyval) {
  const auto eq = keyval.find('=');
  if (eq == std::string::npos || eq == 0)
    throw std::invalid_argument("config: override must look like section.key=value, got '" +
                                keyval + "'");
  set(keyval.substr(0, eq), parse_override_value(keyval.substr(eq + 1)));
}

void ExperimentConfig::set(const std::string& dotted, const json& value) {
  json* node = &tree_;
  std::string where;
  std::istringstream ss(dotted);
  std::string part;
  std::vector<std::string> parts;
  while (std::getline(ss, part, '.')) parts.push_back(part);
  if (parts.empty()) throw std::invalid_argument("config: empty key");
  for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
    if (!node->contains(parts[i]) || !(*node)[parts[i]].is_object())
      throw std::invalid_argument("config: unknown section '" +
                                  (where.empty() ? parts[i] : where + "." + parts[i]) +
                                  "'; valid keys here: " + sibling_list(*node));
    node = &(*node)[parts[i]];
    where = where.empty() ? parts[i] : where + "." + parts[i];
  }
  json leaf = json::object();
  leaf[parts.back()] = value;
  merge_validated(*node, leaf, where);
}

std::uint64_t ExperimentConfig::seed() const { return tree_.at("seed").get<std::uint64_t>(); }
std::string ExperimentConfig::dataset_root() const {
  return tree_.at("dataset").at("root").get<std::string>();
}
int ExperimentConfig::channel_policy() const {
  const int p = tree_.at("dataset").at("channel_policy").get<int>();
  if (p != 1 && p != 3)
    throw std::invalid_argument("config: dataset.channel_policy must be 1 or 3");
  return p;
}
int ExperimentConfig::segments() const {
  return tree_.at("sampler").at("segments").get<int>();
}

AugmentConfig ExperimentConfig::train_augment() const {
  const auto& a = tree_.at("augment");
  AugmentConfig cfg;
  cfg.scales = a.at("scales").get<std::vector<Real>>();
  cfg.flip_prob = a.at("flip_prob").get<Real>();
  cfg.crop_size = a.at("crop_size").get<int>();
  cfg.scale_target = 0;  // unused on the training path
  for (int c = 0; c < 3; ++c) {
    cfg.mean[c] = a.at("mean").at(c).get<Real>();
    cfg.stdev[c] = a.at("std").at(c).get<Real>();
  }
  return cfg;
}

AugmentConfig ExperimentConfig::eval_augment() const {
  AugmentConfig cfg = train_augment();
  cfg.crop_size = tree_.at("eval").at("crop_size").get<int>();
  cfg.scale_target = tree_.at("eval").at("scale_target").get<int>();
  if (cfg.scale_target < cfg.crop_size)
    throw std::invalid_argument("config: eval.scale_target must be >= eval.crop_size");
  return cfg;
}

ModelConfig ExperimentConfig::model_config() const {
  const auto& m = tree_.at("model");
  ModelConfig cfg;
  cfg.preset = m.at("preset").get<std::string>();
  cfg.width_mult = m.at("width_mult").get<Real>();
  cfg.input_channels = m.at("input_channels").get<int>();
  if (cfg.input_channels != channel_policy())
    throw std::invalid_argument(
        "config: model.input_channels must match dataset.channel_policy (got " +
        std::to_string(cfg.input_channels) + " vs " + std::to_string(channel_policy()) + ")");
  cfg.modalities = kModalities;
  cfg.segments = segments();
  cfg.shift.enabled = m.at("shift_enabled").get<bool>();
  cfg.shift.fold_divisor = m.at("fold_divisor").get<int>();
  return cfg;
}

TrainSettings ExperimentConfig::train() const {
  const auto& t = tree_.at("train");
  TrainSettings s;
  s.epochs = t.at("epochs").get<int>();
  s.batch_size = t.at("batch_size").get<int>();
  s.lr = t.at("lr").get<Real>();
  s.momentum = t.at("momentum").get<Real>();
  s.weight_decay = t.at("weight_decay").get<Real>();
  s.clip_norm = t.at("clip_norm").get<Real>();
  s.milestones = t.at("milestones").get<std::vector<int>>();
  if (s.milestones.empty() && s.epochs > 0)
    s.milestones = {s.epochs / 3, s.epochs * 5 / 6};
  std::erase_if(s.milestones, [](int m) { return m < 1; });
  s.lr_factor = t.at("lr_factor").get<Real>();
  s.fusion = fusion_from_json(t.at("fusion"));
  s.val_fraction = t.at("val_fraction").get<Real>();
  s.checkpoint_every_epoch = t.at("checkpoint_every_epoch").get<bool>();
  s.pretrained = t.at("pretrained").get<std::string>();
  if (s.epochs < 1 || s.batch_size < 1) throw std::invalid_argument("config: bad train sizes");
  if (s.lr <= 0 || s.lr_factor <= 0 || s.clip_norm <= 0)
    throw std::invalid_argument("config: train rates and clip norm must be positive");
  return s;
}

EvalSettings ExperimentConfig::eval() const {
  const auto& e = tree_.at("eval");
  EvalSettings s;
  s.passes = e.at("passes").get<int>();
  s.dense = e.at("dense").get<bool>();
  s.tta_flip = e.at("tta_flip").get<bool>();
  s.crop_size = e.at("crop_size").get<int>();
  s.scale_target = e.at("scale_target").get<int>();
  s.segments = e.at("segments").get<int>();
  if (s.segments == 0) s.segments = segments();
  s.fusion = fusion_from_json(e.at("fusion"));
  s.split = e.at("split").get<std::string>();
  if (s.passes < 1) throw std::invalid_argument("config: eval.passes must be >= 1");
  return s;
}

std::string ExperimentConfig::canonical() const { return tree_.dump(); }

std::uint64_t ExperimentConfig::run_hash() const {
  const std::string c = canonical();
  return fnv1a64(c.data(), c.size());
}

std::uint64_t ExperimentConfig::model_hash(int classes) const {
  const auto& m = tree_.at("model");
  json shape = {{"preset", m.at("preset")},
                {"width_mult", m.at("width_mult")},
                {"input_channels", m.at("input_channels")},
                {"modalities", kModalities},
                {"classes", classes}};
  const std::string c = shape.dump();
  return fnv1a64(c.data(), c.size());
}

std::string ExperimentConfig::dump_pretty() const { return tree_.dump(2) + "\n"; }

}  // namespace mmtsm
