#include "laeo/svg_plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace laeo {
namespace {

constexpr double kW = 640, kH = 420;
constexpr double kL = 70, kR = 150, kT = 40, kB = 50;  // margins (legend on the right)
const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

std::string num(double x) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.6g", x);
  return buf;
}

}  // namespace

void write_svg_plot(const std::string& path, const std::string& title, const std::string& x_label,
                    const std::string& y_label, const std::vector<PlotSeries>& series) {
  if (series.empty()) throw std::invalid_argument("svg_plot: no series");
  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
  double ymin = xmin, ymax = -xmin;
  for (const PlotSeries& s : series) {
    if (s.xs.size() != s.ys.size() || (!s.yerr.empty() && s.yerr.size() != s.ys.size()))
      throw std::invalid_argument("svg_plot: series \"" + s.label + "\" length mismatch");
    for (std::size_t i = 0; i < s.xs.size(); ++i) {
      const double e = s.yerr.empty() ? 0.0 : s.yerr[i];
      xmin = std::min(xmin, s.xs[i]);
      xmax = std::max(xmax, s.xs[i]);
      ymin = std::min(ymin, s.ys[i] - e);
      ymax = std::max(ymax, s.ys[i] + e);
    }
  }
  if (!std::isfinite(xmin)) throw std::invalid_argument("svg_plot: all series are empty");
  if (xmax == xmin) { xmin -= 0.5; xmax += 0.5; }
  if (ymax == ymin) { ymin -= 0.5; ymax += 0.5; }
  const double pad = 0.05 * (ymax - ymin);
  ymin -= pad;
  ymax += pad;

  auto px = [&](double x) { return kL + (x - xmin) / (xmax - xmin) * (kW - kL - kR); };
  auto py = [&](double y) { return kH - kB - (y - ymin) / (ymax - ymin) * (kH - kT - kB); };

  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<text x=\"" << kW / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"15\">" << title
      << "</text>\n";

  // axes + ticks
  out << "<line x1=\"" << kL << "\" y1=\"" << kH - kB << "\" x2=\"" << kW - kR << "\" y2=\""
      << kH - kB << "\" stroke=\"black\"/>\n"
      << "<line x1=\"" << kL << "\" y1=\"" << kT << "\" x2=\"" << kL << "\" y2=\"" << kH - kB
      << "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double fx = xmin + (xmax - xmin) * i / 4.0;
    const double fy = ymin + (ymax - ymin) * i / 4.0;
    out << "<line x1=\"" << px(fx) << "\" y1=\"" << kH - kB << "\" x2=\"" << px(fx) << "\" y2=\""
        << kH - kB + 5 << "\" stroke=\"black\"/>\n"
        << "<text x=\"" << px(fx) << "\" y=\"" << kH - kB + 18 << "\" text-anchor=\"middle\">"
        << num(fx) << "</text>\n"
        << "<line x1=\"" << kL - 5 << "\" y1=\"" << py(fy) << "\" x2=\"" << kL << "\" y2=\""
        << py(fy) << "\" stroke=\"black\"/>\n"
        << "<text x=\"" << kL - 8 << "\" y=\"" << py(fy) + 4 << "\" text-anchor=\"end\">" << num(fy)
        << "</text>\n";
  }
  out << "<text x=\"" << (kL + kW - kR) / 2 << "\" y=\"" << kH - 12
      << "\" text-anchor=\"middle\">" << x_label << "</text>\n"
      << "<text x=\"16\" y=\"" << (kT + kH - kB) / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
      << (kT + kH - kB) / 2 << ")\">" << y_label << "</text>\n";

  for (std::size_t si = 0; si < series.size(); ++si) {
    const PlotSeries& s = series[si];
    const char* color = kColors[si % (sizeof(kColors) / sizeof(kColors[0]))];
    out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < s.xs.size(); ++i)
      out << num(px(s.xs[i])) << ',' << num(py(s.ys[i])) << ' ';
    out << "\"/>\n";
    for (std::size_t i = 0; i < s.xs.size(); ++i) {
      out << "<circle cx=\"" << num(px(s.xs[i])) << "\" cy=\"" << num(py(s.ys[i]))
          << "\" r=\"2.5\" fill=\"" << color << "\"/>\n";
      if (!s.yerr.empty() && s.yerr[i] > 0.0)
        out << "<line x1=\"" << num(px(s.xs[i])) << "\" y1=\"" << num(py(s.ys[i] - s.yerr[i]))
            << "\" x2=\"" << num(px(s.xs[i])) << "\" y2=\"" << num(py(s.ys[i] + s.yerr[i]))
            << "\" stroke=\"" << color << "\"/>\n";
    }
    const double ly = kT + 16.0 * static_cast<double>(si);
    out << "<line x1=\"" << kW - kR + 10 << "\" y1=\"" << ly << "\" x2=\"" << kW - kR + 30
        << "\" y2=\"" << ly << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n"
        << "<text x=\"" << kW - kR + 36 << "\" y=\"" << ly + 4 << "\">" << s.label << "</text>\n";
  }
  out << "</svg>\n";

  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("svg_plot: cannot open " + path);
  f << out.str();
  if (!f) throw std::runtime_error("svg_plot: failed writing " + path);
}

}  // namespace laeo
