#pragma once

#include <string>
#include <vector>

#include "mmtsm/core/tensor.hpp"

namespace mmtsm {

struct PlotSeries {
  std::string name;
  std::vector<Real> x;
  std::vector<Real> y;
};

/// Minimal PNG line chart: axes, ticks, bitmap-font labels, one polyline
/// per series with a small legend.
void write_line_chart(const std::string& path, const std::vector<PlotSeries>& series,
                      const std::string& title, const std::string& x_label,
                      const std::string& y_label, int width = 640, int height = 400);

/// Confusion-count heatmap, rows true class, columns predicted.
void write_confusion_png(const std::string& path,
                         const std::vector<std::vector<int>>& confusion, int cell = 24);

}  // namespace mmtsm
