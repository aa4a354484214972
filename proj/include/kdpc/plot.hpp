#pragma once

#include <string>
#include <vector>

namespace kdpc {

struct PlotSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  std::string color = "#1f77b4";
  bool dashed = false;
};

struct PlotPanel {
  std::string ylabel;
  std::vector<PlotSeries> series;
};

/// Vertically stacked line charts sharing the x axis, rendered as a
/// standalone SVG document.
std::string render_svg(const std::string& title, const std::string& xlabel,
                       const std::vector<PlotPanel>& panels);

}  // namespace kdpc
