#pragma once

#include <string>
#include <vector>

namespace goodweights::plot {

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  /// Optional band drawn behind the line (same length as x when present).
  std::vector<double> band_lo;
  std::vector<double> band_hi;
  bool markers = false;
  bool line = true;
};

/// Step outline of a histogram: edges has one more entry than values.
struct Bars {
  std::string label;
  std::vector<double> edges;
  std::vector<double> values;
};

struct Panel {
  std::string title;
  std::string xlabel;
  std::string ylabel;
  bool log_x = false;
  bool log_y = false;
  std::vector<Series> series;
  std::vector<Bars> bars;
};

/// Panels laid out left to right in one standalone SVG document.
std::string render(const std::vector<Panel>& panels);

/// Color map over a regular grid; values[row][col] with rows along y.
std::string render_heatmap(const std::string& title, const std::string& xlabel, const std::string& ylabel,
                           const std::vector<double>& x_centers, const std::vector<double>& y_centers,
                           const std::vector<std::vector<double>>& values, const std::string& value_label);

}  // namespace goodweights::plot
