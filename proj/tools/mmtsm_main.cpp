#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "mmtsm/config.hpp"
#include "mmtsm/data/dataset.hpp"
#include "mmtsm/data/synthetic.hpp"
#include "mmtsm/score/runner.hpp"
#include "mmtsm/score/swa.hpp"
#include "mmtsm/score/sweep.hpp"
#include "mmtsm/train/trainer.hpp"

namespace fs = std::filesystem;
using namespace mmtsm;

namespace {

std::string runs_root() {
  const char* env = std::getenv("MMTSM_RUNS_ROOT");
  return env && *env ? env : "runs";
}

std::vector<std::string> split_commas(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream ss(s);
  std::string part;
  while (std::getline(ss, part, ',')) out.push_back(part);
  return out;
}

std::vector<Real> parse_weights(const std::string& s) {
  std::vector<Real> out;
  for (const auto& part : split_commas(s)) {
    std::size_t used = 0;
    out.push_back(std::stod(part, &used));
    if (used != part.size())
      throw std::invalid_argument("bad weight '" + part + "' (expected comma-separated numbers)");
  }
  return out;
}

struct EvalFlags {
  int swa_top = 0;
  int epoch = 0;
  int passes = 0;
  bool tta = false;
  bool dense = false;
  int size = 0;
  int segments = 0;
  double alpha = -1;
  std::string split;
};

void add_eval_flags(CLI::App* cmd, EvalFlags& f) {
  cmd->add_option("--swa-top", f.swa_top, "score the average of the top-K epochs");
  cmd->add_option("--epoch", f.epoch, "score one specific epoch's checkpoint");
  cmd->add_option("--passes", f.passes, "temporal sampling passes (2 = twice sampling)");
  cmd->add_flag("--tta", f.tta, "average the horizontal-flip view in");
  cmd->add_flag("--dense", f.dense, "dense 10-window sampling");
  cmd->add_option("--size", f.size, "input geometry: 224 = 224-of-256, N = N-square");
  cmd->add_option("--segments", f.segments, "segments at scoring time");
  cmd->add_option("--alpha", f.alpha, "depth fusion weight at scoring time");
  cmd->add_option("--split", f.split, "val (default), train or all");
}

void fill_request(EvalRequest& req, const EvalFlags& f) {
  req.swa_top = f.swa_top;
  req.epoch = f.epoch;
  req.passes = f.passes;
  req.tta = f.tta;
  req.dense = f.dense;
  if (f.size > 0) {
    const auto [crop, scale] = size_preset(f.size);
    req.crop_size = crop;
    req.scale_target = scale;
  }
  req.segments = f.segments;
  req.alpha = f.alpha;
  req.split = f.split;
}

std::string hash16(std::uint64_t h) {
  char buf[24];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"multimodal temporal-shift action recognition"};
  app.require_subcommand(1);

  // gen-data
  auto* gen = app.add_subcommand("gen-data", "write a synthetic multimodal dataset");
  std::string gen_out = "data/synthetic";
  SyntheticSpec spec;
  bool gen_force = false;
  gen->add_option("--out", gen_out, "dataset root to create");
  gen->add_option("--clips", spec.n_clips, "number of clips");
  gen->add_option("--classes", spec.classes, "number of classes (2..8)");
  gen->add_option("--frames", spec.frames, "frames per clip (>= 8)");
  gen->add_option("--size", spec.size, "frame side in pixels (>= 32)");
  gen->add_option("--seed", spec.seed, "generator seed");
  gen->add_flag("--depth-noise-only", spec.depth_noise_only,
                "render pure noise into the depth modality");
  gen->add_flag("--force", gen_force, "overwrite an existing dataset");

  // train
  auto* train = app.add_subcommand("train", "train one model into a run directory");
  std::string train_config, train_run_dir;
  std::vector<std::string> overrides;
  bool train_force = false;
  train->add_option("--config", train_config, "experiment config file (JSON)");
  train->add_option("--override,-o", overrides, "dotted config override, e.g. train.epochs=2");
  train->add_option("--run", train_run_dir,
                    "run directory (default: $MMTSM_RUNS_ROOT or ./runs, named by config hash)");
  train->add_flag("--force", train_force, "replace an existing run directory");

  // swa
  auto* swa = app.add_subcommand("swa", "average the best checkpoints of a run");
  std::string swa_run_dir;
  int swa_top = 3;
  swa->add_option("--run", swa_run_dir, "run directory")->required();
  swa->add_option("--top", swa_top, "how many best epochs to average");

  // eval
  auto* eval = app.add_subcommand("eval", "score a run or checkpoint");
  std::string eval_run_dir, eval_ckpt, eval_weights;
  std::vector<std::string> eval_extra;
  EvalFlags eval_flags;
  eval->add_option("--run", eval_run_dir, "run directory");
  eval->add_option("--ckpt", eval_ckpt, "checkpoint file (settings from its embedded config)");
  eval->add_option("--ensemble", eval_extra, "additional run directories to ensemble with");
  eval->add_option("--weights", eval_weights, "comma-separated ensemble weights");
  add_eval_flags(eval, eval_flags);

  // ensemble-eval
  auto* ens = app.add_subcommand("ensemble-eval", "score several runs as one ensemble");
  std::vector<std::string> ens_runs;
  std::string ens_weights;
  EvalFlags ens_flags;
  ens->add_option("--runs", ens_runs, "run directories")->required()->expected(-2);
  ens->add_option("--weights", ens_weights, "comma-separated ensemble weights");
  add_eval_flags(ens, ens_flags);

  // sweep
  auto* sweep = app.add_subcommand("sweep", "score a run along one axis");
  std::string sweep_run_dir, sweep_axis, sweep_values;
  EvalFlags sweep_flags;
  sweep->add_option("--run", sweep_run_dir, "run directory")->required();
  sweep->add_option("--axis", sweep_axis, "alpha, segments, input_size or epochs")->required();
  sweep->add_option("--values", sweep_values, "comma-separated axis values")->required();
  add_eval_flags(sweep, sweep_flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*gen) {
      if (fs::exists(fs::path(gen_out) / "index.json")) {
        if (!gen_force)
          throw std::invalid_argument("gen-data: " + gen_out +
                                      " already holds a dataset; pass --force to replace it");
        fs::remove_all(gen_out);
      }
      gen_synthetic(gen_out, spec);
      const auto index = load_index(gen_out);
      std::cout << "wrote " << index.clips.size() << " clips, " << index.num_classes()
                << " classes to " << gen_out << "\n";
      for (const auto& c : index.classes) std::cout << "  " << c << "\n";
    } else if (*train) {
      const auto cfg = train_config.empty()
                           ? ExperimentConfig::from_overrides(overrides)
                           : ExperimentConfig::from_file(train_config, overrides);
      std::string run_dir = train_run_dir;
      if (run_dir.empty())
        run_dir = (fs::path(runs_root()) / ("run_" + hash16(cfg.run_hash()))).string();
      if (fs::exists(fs::path(run_dir) / "config.json")) {
        if (!train_force)
          throw std::invalid_argument("train: " + run_dir +
                                      " already holds a run; pass --force to replace it");
        fs::remove_all(run_dir);
      }
      const TrainOutcome outcome = train_run(cfg, run_dir, std::cout);
      std::cout << "run " << run_dir << "  best epoch " << outcome.best_epoch << " (val@1 "
                << outcome.best_val_top1 << ")\n";
    } else if (*swa) {
      swa_run(swa_run_dir, swa_top, std::cout);
    } else if (*eval) {
      EvalRequest req;
      if (!eval_run_dir.empty()) req.run_dirs.push_back(eval_run_dir);
      for (const auto& extra : eval_extra) req.run_dirs.push_back(extra);
      req.ckpt = eval_ckpt;
      if (!eval_weights.empty()) req.weights = parse_weights(eval_weights);
      fill_request(req, eval_flags);
      run_evaluation(req, std::cout);
    } else if (*ens) {
      EvalRequest req;
      req.run_dirs = ens_runs;
      if (!ens_weights.empty()) req.weights = parse_weights(ens_weights);
      fill_request(req, ens_flags);
      run_evaluation(req, std::cout);
    } else if (*sweep) {
      EvalRequest base;
      fill_request(base, sweep_flags);
      sweep_run(sweep_run_dir, sweep_axis, split_commas(sweep_values), base, std::cout);
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
