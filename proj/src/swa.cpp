#include "mmtsm/score/swa.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <stdexcept>
#include <unordered_map>

#include "mmtsm/config.hpp"
#include "mmtsm/pipeline/batch.hpp"
#include "mmtsm/train/split.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace mmtsm {

std::vector<SwaPick> select_swa_epochs(std::vector<SwaPick> all, int top_k) {
  if (top_k < 1) throw std::invalid_argument("swa: top_k < 1");
  std::stable_sort(all.begin(), all.end(), [](const SwaPick& a, const SwaPick& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.epoch < b.epoch;
  });
  if (static_cast<int>(all.size()) > top_k) all.resize(top_k);
  std::sort(all.begin(), all.end(),
            [](const SwaPick& a, const SwaPick& b) { return a.epoch < b.epoch; });
  return all;
}

CheckpointMeta average_checkpoints(const std::vector<std::string>& paths, ParamRefs& params,
                                   std::uint64_t expect_hash) {
  if (paths.empty()) throw std::invalid_argument("swa: no checkpoints to average");
  if (paths.size() == 1) return load_checkpoint(paths[0], params, expect_hash);

  std::unordered_map<std::string, ParamRef*> by_name;
  for (auto& p : params) by_name[p.name] = &p;

  std::vector<std::vector<double>> sums(params.size());
  CheckpointMeta meta;
  for (std::size_t f = 0; f < paths.size(); ++f) {
    const CheckpointContent content = read_checkpoint(paths[f]);
    if (content.meta.model_hash != expect_hash)
      throw std::runtime_error("swa: checkpoint " + paths[f] +
                               " carries a different model hash; refusing to average");
    if (content.arrays.size() != params.size())
      throw std::runtime_error("swa: checkpoint " + paths[f] + " holds " +
                               std::to_string(content.arrays.size()) + " arrays, model has " +
                               std::to_string(params.size()));
    if (f == 0) meta = content.meta;
    for (const auto& a : content.arrays) {
      auto it = by_name.find(a.name);
      if (it == by_name.end())
        throw std::runtime_error("swa: unknown array '" + a.name + "' in " + paths[f]);
      auto* slot = it->second;
      const std::size_t idx = static_cast<std::size_t>(slot - params.data());
      if (a.data.size() != slot->value->numel())
        throw std::runtime_error("swa: size mismatch for '" + a.name + "' in " + paths[f]);
      auto& sum = sums[idx];
      if (sum.empty())
        sum = a.data;
      else
        for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += a.data[i];
    }
  }

  const double n = static_cast<double>(paths.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (sums[i].empty())
      throw std::runtime_error("swa: parameter '" + params[i].name +
                               "' missing from the checkpoints");
    Real* dst = params[i].value->data();
    for (std::size_t j = 0; j < sums[i].size(); ++j) dst[j] = sums[i][j] / n;
  }
  meta.epoch = 0;
  meta.score = 0;
  return meta;
}

void recompute_bn_stats(TsmModel& model, ClipStore& store, const std::vector<int>& subset,
                        int segments, const AugmentConfig& aug, int channels, int batch_size,
                        std::uint64_t seed) {
  if (subset.empty()) throw std::invalid_argument("swa: empty subset for stat recompute");
  const std::uint64_t pass_seed = mix_seed({seed, 0x626e7263u});
  std::vector<int> order = subset;
  {
    auto rng = make_engine(pass_seed);
    std::shuffle(order.begin(), order.end(), rng);
  }
  model.reset_bn_stats();
  model.set_bn_cumulative(true);
  const auto& index = store.index();
  for (std::size_t at = 0; at < order.size(); at += batch_size) {
    const std::size_t end = std::min(order.size(), at + batch_size);
    std::vector<const ClipFrames*> clips;
    std::vector<int> ids, frames;
    for (std::size_t i = at; i < end; ++i) {
      clips.push_back(&store.get(order[i]));
      ids.push_back(order[i]);
      frames.push_back(index.clips[order[i]].frames);
    }
    TensorR x = build_train_batch(clips, ids, frames, 0, pass_seed, segments, aug, channels);
    model.forward(x, segments, true);
  }
  model.set_bn_cumulative(false);
}

SwaOutcome swa_run(const std::string& run_dir, int top_k, std::ostream& log) {
  const auto cfg = ExperimentConfig::from_file((fs::path(run_dir) / "config.json").string(), {});

  json scores;
  {
    std::ifstream is(fs::path(run_dir) / "scores.json");
    if (!is) throw std::runtime_error("swa: no scores.json in " + run_dir + " (train first)");
    is >> scores;
  }
  std::vector<SwaPick> all;
  for (const auto& e : scores.at("epochs")) {
    const std::string ckpt = e.at("checkpoint").get<std::string>();
    if (ckpt.empty()) continue;
    all.push_back({e.at("epoch").get<int>(), e.at("val_top1").get<Real>(), ckpt});
  }
  if (all.empty()) throw std::runtime_error("swa: run has no saved checkpoints");
  if (top_k > static_cast<int>(all.size())) {
    log << "swa: only " << all.size() << " checkpoints available, averaging all of them\n";
    top_k = static_cast<int>(all.size());
  }
  auto picked = select_swa_epochs(all, top_k);

  const auto index = load_index(cfg.dataset_root());
  const int classes = index.num_classes();
  ModelConfig mc = cfg.model_config();
  mc.classes = classes;
  TsmModel model(mc);
  model.init(cfg.seed());

  std::vector<std::string> paths;
  for (const auto& p : picked) {
    paths.push_back((fs::path(run_dir) / p.checkpoint).string());
    log << "swa: epoch " << p.epoch << " (val@1 " << p.score << ")\n";
  }
  average_checkpoints(paths, model.params(), cfg.model_hash(classes));

  ClipStore store(index);
  const DataSplit split = stratified_split(index, cfg.train().val_fraction, cfg.seed());
  recompute_bn_stats(model, store, split.train, cfg.segments(), cfg.train_augment(),
                     cfg.channel_policy(), cfg.train().batch_size, cfg.seed());

  SwaOutcome outcome;
  outcome.picked = picked;
  if (!split.val.empty()) {
    EvalSettings val_eval = cfg.eval();
    val_eval.passes = 1;
    val_eval.dense = false;
    val_eval.tta_flip = false;
    std::vector<EnsembleMember> self{{&model, 1.0, cfg.segments(), "swa"}};
    const EvalResult vr = evaluate(self, store, split.val, val_eval, cfg.eval_augment(),
                                   cfg.channel_policy(), cfg.seed());
    outcome.val_top1 = vr.metrics.top1();
    outcome.val_top5 = vr.metrics.top5();
  }

  fs::create_directories(fs::path(run_dir) / "swa");
  const std::string rel = "swa/swa_top" + std::to_string(top_k) + ".bin";
  CheckpointMeta meta;
  meta.model_hash = cfg.model_hash(classes);
  meta.epoch = 0;
  meta.score = outcome.val_top1;
  meta.config_json = cfg.canonical();
  save_checkpoint((fs::path(run_dir) / rel).string(), model.params(), meta);
  outcome.checkpoint = rel;

  json summary;
  summary["top_k"] = top_k;
  summary["picked"] = json::array();
  for (const auto& p : picked)
    summary["picked"].push_back(
        {{"epoch", p.epoch}, {"val_top1", p.score}, {"checkpoint", p.checkpoint}});
  summary["val_top1"] = outcome.val_top1;
  summary["val_top5"] = outcome.val_top5;
  summary["checkpoint"] = rel;
  {
    std::ofstream os(fs::path(run_dir) / ("swa/swa_top" + std::to_string(top_k) + ".json"));
    os << summary.dump(2) << "\n";
  }
  log << "swa: wrote " << rel << " (val@1 " << outcome.val_top1 << ")\n";
  return outcome;
}

}  // namespace mmtsm
