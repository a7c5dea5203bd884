#include "mmtsm/score/runner.hpp"

#include <nlohmann/json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <ostream>
#include <stdexcept>

#include "mmtsm/config.hpp"
#include "mmtsm/model/checkpoint.hpp"
#include "mmtsm/report/plot.hpp"
#include "mmtsm/score/predict.hpp"
#include "mmtsm/score/swa.hpp"
#include "mmtsm/train/split.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace mmtsm {

namespace {

std::string fmt_g(Real v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

/// Checkpoint to score for one run: the SWA average when requested (built
/// on demand), a pinned epoch, or the best validation epoch.
std::string resolve_checkpoint(const std::string& run_dir, const EvalRequest& req,
                               std::ostream& log) {
  if (req.swa_top > 0) {
    const std::string rel = "swa/swa_top" + std::to_string(req.swa_top) + ".bin";
    if (!fs::exists(fs::path(run_dir) / rel)) {
      log << "eval: " << rel << " missing in " << run_dir << ", averaging now\n";
      return swa_run(run_dir, req.swa_top, log).checkpoint;
    }
    return rel;
  }

  json scores;
  {
    std::ifstream is(fs::path(run_dir) / "scores.json");
    if (!is) throw std::runtime_error("eval: no scores.json in " + run_dir + " (train first)");
    is >> scores;
  }
  if (req.epoch > 0) {
    for (const auto& e : scores.at("epochs"))
      if (e.at("epoch").get<int>() == req.epoch) {
        const std::string ckpt = e.at("checkpoint").get<std::string>();
        if (ckpt.empty())
          throw std::runtime_error("eval: epoch " + std::to_string(req.epoch) +
                                   " of " + run_dir + " has no saved checkpoint");
        return ckpt;
      }
    throw std::runtime_error("eval: run " + run_dir + " has no epoch " +
                             std::to_string(req.epoch));
  }
  const int best = scores.at("best_epoch").get<int>();
  if (best <= 0) throw std::runtime_error("eval: run " + run_dir + " has no best epoch");
  for (const auto& e : scores.at("epochs"))
    if (e.at("epoch").get<int>() == best) return e.at("checkpoint").get<std::string>();
  throw std::runtime_error("eval: best epoch missing from scores.json in " + run_dir);
}

std::string settings_tag(const EvalRequest& req, const EvalSettings& es, int n_members) {
  std::string tag = es.split;
  if (req.swa_top > 0) tag += "_swa" + std::to_string(req.swa_top);
  if (req.epoch > 0) tag += "_ep" + std::to_string(req.epoch);
  if (es.dense)
    tag += "_dense";
  else if (es.passes > 1)
    tag += "_p" + std::to_string(es.passes);
  if (es.tta_flip) tag += "_tta";
  tag += "_c" + std::to_string(es.crop_size) + "x" + std::to_string(es.scale_target);
  if (req.segments > 0) tag += "_seg" + std::to_string(req.segments);
  if (req.alpha >= 0) tag += "_a" + fmt_g(req.alpha);
  if (n_members > 1) tag += "_ens" + std::to_string(n_members);
  return tag;
}

}  // namespace

RunEvalOutcome run_evaluation(const EvalRequest& req, std::ostream& log) {
  const bool ckpt_mode = !req.ckpt.empty();
  if (ckpt_mode && !req.run_dirs.empty())
    throw std::invalid_argument("eval: pass either a checkpoint or run directories, not both");
  if (!ckpt_mode && req.run_dirs.empty())
    throw std::invalid_argument("eval: no run directories given");
  if (ckpt_mode && (req.swa_top > 0 || req.epoch > 0))
    throw std::invalid_argument("eval: checkpoint selection flags need a run directory");
  const std::size_t n_members = ckpt_mode ? 1 : req.run_dirs.size();
  if (!req.weights.empty() && req.weights.size() != n_members)
    throw std::invalid_argument("eval: need one ensemble weight per member");

  const auto cfg0 =
      ckpt_mode
          ? ExperimentConfig::from_json_text(read_checkpoint_meta(req.ckpt).config_json)
          : ExperimentConfig::from_file((fs::path(req.run_dirs[0]) / "config.json").string(),
                                        {});
  const auto index = load_index(cfg0.dataset_root());
  const int classes = index.num_classes();

  EvalSettings es = cfg0.eval();
  if (req.passes > 0) es.passes = req.passes;
  if (req.tta) es.tta_flip = true;
  if (req.dense) es.dense = true;
  if (req.crop_size > 0) es.crop_size = req.crop_size;
  if (req.scale_target > 0) es.scale_target = req.scale_target;
  if (req.alpha >= 0) es.fusion.alpha = req.alpha;
  if (!req.split.empty()) es.split = req.split;
  if (es.split != "val" && es.split != "train" && es.split != "all")
    throw std::invalid_argument("eval: split must be val, train or all (got '" + es.split +
                                "')");
  if (es.scale_target < es.crop_size)
    throw std::invalid_argument("eval: scale target " + std::to_string(es.scale_target) +
                                " below crop size " + std::to_string(es.crop_size));

  AugmentConfig ea = cfg0.eval_augment();
  ea.crop_size = es.crop_size;
  ea.scale_target = es.scale_target;

  std::vector<std::unique_ptr<TsmModel>> models;
  std::vector<EnsembleMember> members;
  std::vector<std::string> used_checkpoints;
  if (ckpt_mode) {
    ModelConfig mc = cfg0.model_config();
    mc.classes = classes;
    auto model = std::make_unique<TsmModel>(mc);
    model->init(cfg0.seed());
    load_checkpoint(req.ckpt, model->params(), cfg0.model_hash(classes));
    used_checkpoints.push_back(req.ckpt);
    const int seg = req.segments > 0 ? req.segments
                                     : (es.segments > 0 ? es.segments : cfg0.segments());
    members.push_back({model.get(), req.weights.empty() ? Real(1) : req.weights[0], seg,
                       req.ckpt});
    models.push_back(std::move(model));
  }
  for (std::size_t r = 0; r < req.run_dirs.size(); ++r) {
    const std::string& run_dir = req.run_dirs[r];
    const auto cfg = r == 0 ? cfg0
                            : ExperimentConfig::from_file(
                                  (fs::path(run_dir) / "config.json").string(), {});
    if (cfg.dataset_root() != cfg0.dataset_root())
      throw std::runtime_error("eval: ensemble runs score different datasets (" +
                               cfg.dataset_root() + " vs " + cfg0.dataset_root() + ")");
    ModelConfig mc = cfg.model_config();
    mc.classes = classes;
    auto model = std::make_unique<TsmModel>(mc);
    model->init(cfg.seed());

    const std::string rel = resolve_checkpoint(run_dir, req, log);
    load_checkpoint((fs::path(run_dir) / rel).string(), model->params(),
                    cfg.model_hash(classes));
    used_checkpoints.push_back(rel);

    EnsembleMember member;
    member.model = model.get();
    member.weight = req.weights.empty() ? Real(1) : req.weights[r];
    member.segments = req.segments > 0
                          ? req.segments
                          : (cfg.eval().segments > 0 ? cfg.eval().segments : cfg.segments());
    member.label = run_dir;
    members.push_back(member);
    models.push_back(std::move(model));
  }

  const DataSplit split = stratified_split(index, cfg0.train().val_fraction, cfg0.seed());
  std::vector<int> subset;  // empty means every clip
  if (es.split == "train") subset = split.train;
  if (es.split == "val") subset = split.val;
  if (es.split != "all" && subset.empty())
    throw std::runtime_error("eval: split '" + es.split + "' is empty for this dataset");

  ClipStore store(index);
  const EvalResult result =
      evaluate(members, store, subset, es, ea, cfg0.channel_policy(), cfg0.seed());

  RunEvalOutcome outcome;
  outcome.name = settings_tag(req, es, static_cast<int>(members.size()));
  outcome.metrics = result.metrics;
  outcome.top1 = result.metrics.top1();
  outcome.top5 = result.metrics.top5();

  json report;
  report["tag"] = outcome.name;
  if (!req.run_dirs.empty()) report["runs"] = req.run_dirs;
  report["checkpoints"] = used_checkpoints;
  if (!req.weights.empty()) report["weights"] = req.weights;
  json settings;
  settings["split"] = es.split;
  settings["passes"] = es.passes;
  settings["dense"] = es.dense;
  settings["tta_flip"] = es.tta_flip;
  settings["crop_size"] = es.crop_size;
  settings["scale_target"] = es.scale_target;
  settings["fusion"] = {{"gamma", es.fusion.gamma}, {"beta", es.fusion.beta},
                        {"alpha", es.fusion.alpha}};
  json segs = json::array();
  for (const auto& m : members) segs.push_back(m.segments);
  settings["segments"] = segs;
  report["settings"] = settings;
  report["clips"] = result.metrics.count;
  report["top1"] = outcome.top1;
  report["top5"] = outcome.top5;
  json per_class = json::array();
  for (int c = 0; c < classes; ++c) per_class.push_back(result.metrics.per_class(c));
  report["per_class"] = per_class;
  report["confusion"] = result.metrics.confusion;
  if (result.clip_indices.size() <= 200) {
    json per_clip = json::array();
    for (std::size_t i = 0; i < result.clip_indices.size(); ++i) {
      const auto& clip = index.clips[result.clip_indices[i]];
      per_clip.push_back({{"id", clip.id},
                          {"label", clip.label},
                          {"pred", argmax_class(result.scores[i])},
                          {"scores", result.scores[i]}});
    }
    report["per_clip"] = per_clip;
  }

  const fs::path eval_dir = ckpt_mode ? fs::path(req.ckpt).parent_path() / "eval"
                                      : fs::path(req.run_dirs[0]) / "eval";
  fs::create_directories(eval_dir);
  outcome.report_path = (eval_dir / (outcome.name + ".json")).string();
  {
    std::ofstream os(outcome.report_path);
    os << report.dump(2) << "\n";
  }
  outcome.heatmap_path = (eval_dir / (outcome.name + "_confusion.png")).string();
  write_confusion_png(outcome.heatmap_path, result.metrics.confusion);

  log << "eval " << outcome.name << ": top1 " << outcome.top1 << "  top5 " << outcome.top5
      << "  (" << result.metrics.count << " clips) -> " << outcome.report_path << "\n";
  return outcome;
}

}  // namespace mmtsm
