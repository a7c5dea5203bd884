#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "mmtsm/score/runner.hpp"

namespace mmtsm {

struct SweepPoint {
  std::string value;
  Real top1 = 0;
  Real top5 = 0;
  std::string report;
};

struct SweepOutcome {
  std::string axis;
  std::vector<SweepPoint> points;
  std::string table_path;
  std::string plot_path;
};

/// Score one finished run along an axis: "alpha" (depth fusion weight),
/// "segments" (temporal resolution at scoring time), "input_size" (spatial
/// geometry via size_preset) or "epochs" (per-epoch checkpoints). Writes
/// sweep/<axis>.json and sweep/<axis>.png under the run directory.
SweepOutcome sweep_run(const std::string& run_dir, const std::string& axis,
                       const std::vector<std::string>& values, const EvalRequest& base,
                       std::ostream& log);

}  // namespace mmtsm
