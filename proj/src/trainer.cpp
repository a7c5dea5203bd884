#include "mmtsm/train/trainer.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <stdexcept>

#include "mmtsm/model/checkpoint.hpp"
#include "mmtsm/pipeline/batch.hpp"
#include "mmtsm/report/plot.hpp"
#include "mmtsm/score/predict.hpp"
#include "mmtsm/train/loss.hpp"
#include "mmtsm/train/sgd.hpp"
#include "mmtsm/train/split.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace mmtsm {

namespace {

std::string epoch_file(int epoch) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "ckpt/epoch_%03d.bin", epoch);
  return buf;
}

json epoch_to_json(const EpochReport& r) {
  return json{{"epoch", r.epoch},         {"lr", r.lr},
              {"train_loss", r.train_loss}, {"train_top1", r.train_top1},
              {"val_top1", r.val_top1},   {"val_top5", r.val_top5},
              {"grad_norm", r.grad_norm}, {"checkpoint", r.checkpoint}};
}

}  // namespace

TrainOutcome train_run(const ExperimentConfig& cfg, const std::string& run_dir,
                       std::ostream& log) {
  const auto index = load_index(cfg.dataset_root());
  const int classes = index.num_classes();
  const TrainSettings train = cfg.train();
  const AugmentConfig train_aug = cfg.train_augment();
  const int segments = cfg.segments();
  const int channels = cfg.channel_policy();
  const std::uint64_t seed = cfg.seed();

  ModelConfig mc = cfg.model_config();
  mc.classes = classes;
  TsmModel model(mc);
  model.init(seed);

  fs::create_directories(fs::path(run_dir) / "ckpt");
  {
    std::ofstream os(fs::path(run_dir) / "config.json");
    os << cfg.dump_pretty() << "\n";
  }

  if (!train.pretrained.empty()) {
    const auto report = load_pretrained_backbone(train.pretrained, model.params());
    log << "pretrained " << train.pretrained << ": loaded " << report.loaded
        << ", adapted " << report.adapted << ", skipped " << report.skipped
        << ", fresh " << report.fresh << "\n";
  }

  const DataSplit split = stratified_split(index, train.val_fraction, seed);
  if (split.train.empty()) throw std::runtime_error("train: empty training split");
  log << "dataset " << cfg.dataset_root() << ": " << index.clips.size() << " clips, "
      << classes << " classes, " << split.train.size() << " train / " << split.val.size()
      << " val\n";

  ClipStore store(index);
  SgdOptimizer opt(train.lr, train.momentum, train.weight_decay);

  EvalSettings val_eval = cfg.eval();
  val_eval.passes = 1;
  val_eval.dense = false;
  val_eval.tta_flip = false;
  const AugmentConfig eval_aug = cfg.eval_augment();
  const std::vector<EnsembleMember> self{{&model, 1.0, segments, "train"}};

  TrainOutcome outcome;
  outcome.run_dir = run_dir;
  std::ofstream report_stream(fs::path(run_dir) / "report.jsonl", std::ios::trunc);

  for (int epoch = 1; epoch <= train.epochs; ++epoch) {
    const Real lr = lr_at_epoch(train.lr, epoch, train.milestones, train.lr_factor);
    opt.set_lr(lr);

    std::vector<int> order = split.train;
    {
      auto rng = make_engine(mix_seed({seed, 0x73687566u, static_cast<std::uint64_t>(epoch)}));
      std::shuffle(order.begin(), order.end(), rng);
    }

    Real loss_sum = 0;
    int seen = 0, hits = 0;
    Real last_norm = 0;
    for (std::size_t at = 0; at < order.size(); at += train.batch_size) {
      const std::size_t end = std::min(order.size(), at + train.batch_size);
      std::vector<const ClipFrames*> clips;
      std::vector<int> ids, frames, labels;
      for (std::size_t i = at; i < end; ++i) {
        const int ci = order[i];
        clips.push_back(&store.get(ci));
        ids.push_back(ci);
        frames.push_back(index.clips[ci].frames);
        labels.push_back(index.clips[ci].label);
      }
      TensorR x = build_train_batch(clips, ids, frames, epoch, seed, segments, train_aug,
                                    channels);
      model.zero_grads();
      TensorR logits = model.forward(x, segments, true);
      LossResult loss = fused_cross_entropy(logits, labels, train.fusion);
      if (!std::isfinite(loss.value))
        throw std::runtime_error("train: non-finite loss at epoch " + std::to_string(epoch) +
                                 ", step " + std::to_string(at / train.batch_size) +
                                 " (lr " + std::to_string(lr) + ")");
      model.backward(loss.glogits);
      last_norm = grad_clip(model.params(), train.clip_norm);
      opt.step(model.params());

      const int b = static_cast<int>(labels.size());
      loss_sum += loss.value * b;
      for (int i = 0; i < b; ++i) {
        std::vector<Real> row(classes);
        for (int c = 0; c < classes; ++c) row[c] = loss.probs.at(i, c);
        if (label_rank(row, labels[i]) == 0) ++hits;
      }
      seen += b;
    }

    EpochReport er;
    er.epoch = epoch;
    er.lr = lr;
    er.train_loss = loss_sum / seen;
    er.train_top1 = static_cast<Real>(hits) / seen;
    er.grad_norm = last_norm;

    if (!split.val.empty()) {
      const EvalResult vr = evaluate(self, store, split.val, val_eval, eval_aug, channels, seed);
      er.val_top1 = vr.metrics.top1();
      er.val_top5 = vr.metrics.top5();
    }

    if (train.checkpoint_every_epoch || epoch == train.epochs) {
      er.checkpoint = epoch_file(epoch);
      CheckpointMeta meta;
      meta.model_hash = cfg.model_hash(classes);
      meta.epoch = epoch;
      meta.score = er.val_top1;
      meta.config_json = cfg.canonical();
      save_checkpoint((fs::path(run_dir) / er.checkpoint).string(), model.params(), meta);
    }

    outcome.epochs.push_back(er);
    report_stream << epoch_to_json(er).dump() << "\n";
    report_stream.flush();
    log << "epoch " << epoch << "/" << train.epochs << "  lr " << lr << "  loss "
        << er.train_loss << "  train@1 " << er.train_top1 << "  val@1 " << er.val_top1
        << "  val@5 " << er.val_top5 << "\n";
  }

  outcome.best_epoch = 0;
  for (const auto& er : outcome.epochs) {
    if (er.checkpoint.empty()) continue;
    if (outcome.best_epoch == 0 || er.val_top1 > outcome.best_val_top1) {
      outcome.best_epoch = er.epoch;
      outcome.best_val_top1 = er.val_top1;
      outcome.best_checkpoint = er.checkpoint;
    }
  }

  json scores;
  scores["classes"] = classes;
  scores["model_hash"] = cfg.model_hash(classes);
  scores["run_hash"] = cfg.run_hash();
  scores["best_epoch"] = outcome.best_epoch;
  scores["best_val_top1"] = outcome.best_val_top1;
  scores["epochs"] = json::array();
  for (const auto& er : outcome.epochs) scores["epochs"].push_back(epoch_to_json(er));
  {
    std::ofstream os(fs::path(run_dir) / "scores.json");
    os << scores.dump(2) << "\n";
  }

  fs::create_directories(fs::path(run_dir) / "plots");
  PlotSeries loss_s{"loss", {}, {}}, train_s{"train top1", {}, {}}, val_s{"val top1", {}, {}};
  for (const auto& er : outcome.epochs) {
    const Real e = er.epoch;
    loss_s.x.push_back(e);
    loss_s.y.push_back(er.train_loss);
    train_s.x.push_back(e);
    train_s.y.push_back(er.train_top1);
    val_s.x.push_back(e);
    val_s.y.push_back(er.val_top1);
  }
  write_line_chart((fs::path(run_dir) / "plots/loss.png").string(), {loss_s},
                   "training loss", "epoch", "loss");
  write_line_chart((fs::path(run_dir) / "plots/accuracy.png").string(), {train_s, val_s},
                   "accuracy", "epoch", "top1");
  return outcome;
}

}  // namespace mmtsm
