#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "mmtsm/score/metrics.hpp"

namespace mmtsm {

/// One evaluation over finished runs, or over a bare checkpoint file whose
/// embedded config supplies the settings. Zero-valued fields keep the
/// configured eval settings; flags only turn options on.
struct EvalRequest {
  std::vector<std::string> run_dirs;
  std::string ckpt;           // direct checkpoint path, exclusive with run_dirs
  std::vector<Real> weights;  // empty = uniform ensemble weights
  int swa_top = 0;            // 0 = best single epoch, K = average top-K epochs
  int epoch = 0;              // pin one epoch's checkpoint (0 = best/swa)
  int passes = 0;
  bool tta = false;
  bool dense = false;
  int crop_size = 0;
  int scale_target = 0;
  int segments = 0;
  Real alpha = -1;  // depth fusion weight at scoring time, <0 = keep
  std::string split;  // "", "val", "train", "all"
};

struct RunEvalOutcome {
  std::string name;  // settings tag, also the report file stem
  Real top1 = 0;
  Real top5 = 0;
  EvalMetrics metrics;
  std::string report_path;
  std::string heatmap_path;
};

/// Evaluate per the request and write eval/<tag>.json plus a confusion
/// heatmap under the first run's directory.
RunEvalOutcome run_evaluation(const EvalRequest& req, std::ostream& log);

/// --size shorthand: 224 scores the standard 224-crop-of-256 geometry,
/// anything else an N-square crop without spare margin.
inline std::pair<int, int> size_preset(int n) {
  if (n == 224) return {224, 256};
  return {n, n};
}

}  // namespace mmtsm
