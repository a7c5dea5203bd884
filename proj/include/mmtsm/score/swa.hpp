#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "mmtsm/model/checkpoint.hpp"
#include "mmtsm/pipeline/augment.hpp"
#include "mmtsm/score/predict.hpp"

namespace mmtsm {

struct SwaPick {
  int epoch = 0;
  Real score = 0;
  std::string checkpoint;  // relative to the run dir
};

/// Pick the top_k epochs by validation score, ties toward the earlier
/// epoch; the result is ordered by epoch so averaging order is stable.
std::vector<SwaPick> select_swa_epochs(std::vector<SwaPick> all, int top_k);

/// Elementwise mean of the named checkpoints written into params. Every
/// file must carry expect_hash; a single checkpoint is copied verbatim.
CheckpointMeta average_checkpoints(const std::vector<std::string>& paths, ParamRefs& params,
                                   std::uint64_t expect_hash);

/// Re-estimate normalization statistics after weight averaging: one pass
/// of train-time batches through the model in cumulative-average mode.
void recompute_bn_stats(TsmModel& model, ClipStore& store, const std::vector<int>& subset,
                        int segments, const AugmentConfig& aug, int channels, int batch_size,
                        std::uint64_t seed);

struct SwaOutcome {
  std::string checkpoint;  // absolute or run-relative path of the averaged model
  std::vector<SwaPick> picked;
  Real val_top1 = 0;
  Real val_top5 = 0;
};

/// Average the top_k checkpoints of a finished run, recompute
/// normalization statistics on that run's training split, score the result
/// on its validation split and save run_dir/swa/swa_topK.bin.
SwaOutcome swa_run(const std::string& run_dir, int top_k, std::ostream& log);

}  // namespace mmtsm
