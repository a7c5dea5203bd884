#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "mmtsm/config.hpp"

namespace mmtsm {

struct EpochReport {
  int epoch = 0;  // 1-based
  Real lr = 0;
  Real train_loss = 0;
  Real train_top1 = 0;
  Real val_top1 = 0;
  Real val_top5 = 0;
  Real grad_norm = 0;  // pre-clip norm of the last step
  std::string checkpoint;  // relative to the run dir, empty if not written
};

struct TrainOutcome {
  std::string run_dir;
  std::vector<EpochReport> epochs;
  int best_epoch = 0;
  Real best_val_top1 = 0;
  std::string best_checkpoint;  // relative to the run dir
};

/// Train one model per the resolved config, writing into run_dir:
/// config.json (resolved), ckpt/epoch_NNN.bin, report.jsonl (one record
/// per epoch) and scores.json (the summary SWA selection reads). Result
/// files carry no timestamps, so reruns are byte-identical.
TrainOutcome train_run(const ExperimentConfig& cfg, const std::string& run_dir,
                       std::ostream& log);

}  // namespace mmtsm
