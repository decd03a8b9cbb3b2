#pragma once

#include <string>
#include <utility>
#include <vector>

namespace tmx {

struct PlotSeries {
  std::string label;
  std::vector<std::pair<double, double>> points;
};

struct PlotSpec {
  std::string title, xlabel, ylabel;
  std::vector<PlotSeries> series;
  bool log_x = false;
  bool has_hline = false;
  double hline = 0.0;
  std::string hline_label;
};

// Minimal deterministic SVG line plot.
void write_svg_plot(const std::string& path, const PlotSpec& spec);

// Placeholder panel carrying a message (used when a profile is unresolved).
void write_svg_stub(const std::string& path, const std::string& message);

}  // namespace tmx
