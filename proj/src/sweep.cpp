#include "mmtsm/score/sweep.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <ostream>
#include <stdexcept>

#include "mmtsm/report/plot.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace mmtsm {

SweepOutcome sweep_run(const std::string& run_dir, const std::string& axis,
                       const std::vector<std::string>& values, const EvalRequest& base,
                       std::ostream& log) {
  if (axis != "alpha" && axis != "segments" && axis != "input_size" && axis != "epochs")
    throw std::invalid_argument("sweep: axis must be alpha, segments, input_size or epochs");
  if (values.empty()) throw std::invalid_argument("sweep: no values given");

  SweepOutcome outcome;
  outcome.axis = axis;
  std::vector<Real> xs;
  for (const auto& value : values) {
    EvalRequest req = base;
    req.run_dirs = {run_dir};
    std::size_t used = 0;
    if (axis == "alpha") {
      req.alpha = std::stod(value, &used);
    } else {
      const int n = std::stoi(value, &used);
      if (axis == "segments") {
        if (n < 1) throw std::invalid_argument("sweep: segments must be >= 1");
        req.segments = n;
      } else if (axis == "input_size") {
        const auto [crop, scale] = size_preset(n);
        req.crop_size = crop;
        req.scale_target = scale;
      } else {
        if (n < 1) throw std::invalid_argument("sweep: epochs must be >= 1");
        req.epoch = n;
        req.swa_top = 0;
      }
    }
    if (used != value.size())
      throw std::invalid_argument("sweep: bad " + axis + " value '" + value + "'");

    log << "sweep " << axis << " = " << value << "\n";
    const RunEvalOutcome r = run_evaluation(req, log);
    outcome.points.push_back({value, r.top1, r.top5, r.report_path});
    xs.push_back(std::stod(value));
  }

  const fs::path sweep_dir = fs::path(run_dir) / "sweep";
  fs::create_directories(sweep_dir);

  json table;
  table["axis"] = axis;
  table["points"] = json::array();
  for (const auto& p : outcome.points)
    table["points"].push_back(
        {{"value", p.value}, {"top1", p.top1}, {"top5", p.top5}, {"report", p.report}});
  outcome.table_path = (sweep_dir / (axis + ".json")).string();
  {
    std::ofstream os(outcome.table_path);
    os << table.dump(2) << "\n";
  }

  PlotSeries top1{"top1", xs, {}}, top5{"top5", xs, {}};
  for (const auto& p : outcome.points) {
    top1.y.push_back(p.top1);
    top5.y.push_back(p.top5);
  }
  outcome.plot_path = (sweep_dir / (axis + ".png")).string();
  write_line_chart(outcome.plot_path, {top1, top5}, axis + " sweep", axis, "accuracy");

  log << "sweep " << axis << ": wrote " << outcome.table_path << " and "
      << outcome.plot_path << "\n";
  return outcome;
}

}  // namespace mmtsm
