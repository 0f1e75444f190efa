#pragma once

#include <string>
#include <vector>

namespace laeo {

struct PlotSeries {
  std::string label;
  std::vector<double> xs;
  std::vector<double> ys;
  std::vector<double> yerr;  // optional; same length as ys when present
};

// Writes a small self-contained SVG line plot (one polyline per series,
// optional error bars, legend, linear axes with tick labels).
void write_svg_plot(const std::string& path, const std::string& title, const std::string& x_label,
                    const std::string& y_label, const std::vector<PlotSeries>& series);

}  // namespace laeo
