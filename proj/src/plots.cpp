#include "tmx/plots.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <stdexcept>

namespace tmx {

namespace {

constexpr int kW = 640, kH = 420;
constexpr int kL = 70, kR = 20, kT = 40, kB = 50;

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

}  // namespace

void write_svg_plot(const std::string& path, const PlotSpec& spec) {
  double xmin = std::numeric_limits<double>::max(), xmax = -xmin;
  double ymin = xmin, ymax = -xmin;
  for (const auto& s : spec.series) {
    for (auto [x, y] : s.points) {
      const double xv = spec.log_x ? std::log10(x) : x;
      xmin = std::min(xmin, xv);
      xmax = std::max(xmax, xv);
      ymin = std::min(ymin, y);
      ymax = std::max(ymax, y);
    }
  }
  if (spec.has_hline) {
    ymin = std::min(ymin, spec.hline);
    ymax = std::max(ymax, spec.hline);
  }
  if (!(xmax > xmin)) {
    xmax = xmin + 1;
    xmin -= 1;
  }
  if (!(ymax > ymin)) {
    ymax = ymin + 1;
    ymin -= 1;
  }
  const double ypad = 0.06 * (ymax - ymin);
  ymin -= ypad;
  ymax += ypad;

  auto px = [&](double x) {
    const double xv = spec.log_x ? std::log10(x) : x;
    return kL + (xv - xmin) / (xmax - xmin) * (kW - kL - kR);
  };
  auto py = [&](double y) { return kH - kB - (y - ymin) / (ymax - ymin) * (kH - kT - kB); };

  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH
      << "\" viewBox=\"0 0 " << kW << " " << kH << "\">\n";
  out << "<rect width=\"" << kW << "\" height=\"" << kH << "\" fill=\"white\"/>\n";
  out << "<text x=\"" << kW / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">"
      << spec.title << "</text>\n";
  // Axes.
  out << "<line x1=\"" << kL << "\" y1=\"" << kH - kB << "\" x2=\"" << kW - kR << "\" y2=\""
      << kH - kB << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << kL << "\" y1=\"" << kT << "\" x2=\"" << kL << "\" y2=\"" << kH - kB
      << "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double fx = xmin + (xmax - xmin) * i / 4.0;
    const double fy = ymin + (ymax - ymin) * i / 4.0;
    const double xpix = kL + (kW - kL - kR) * i / 4.0;
    const double ypix = kH - kB - (kH - kT - kB) * i / 4.0;
    out << "<text x=\"" << fmt(xpix) << "\" y=\"" << kH - kB + 18
        << "\" text-anchor=\"middle\" font-size=\"11\">"
        << fmt(spec.log_x ? std::pow(10.0, fx) : fx) << "</text>\n";
    out << "<text x=\"" << kL - 6 << "\" y=\"" << fmt(ypix + 4)
        << "\" text-anchor=\"end\" font-size=\"11\">" << fmt(fy) << "</text>\n";
  }
  out << "<text x=\"" << (kL + kW - kR) / 2 << "\" y=\"" << kH - 14
      << "\" text-anchor=\"middle\" font-size=\"12\">" << spec.xlabel << "</text>\n";
  out << "<text x=\"16\" y=\"" << (kT + kH - kB) / 2
      << "\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 16 "
      << (kT + kH - kB) / 2 << ")\">" << spec.ylabel << "</text>\n";

  if (spec.has_hline) {
    out << "<line x1=\"" << kL << "\" y1=\"" << fmt(py(spec.hline)) << "\" x2=\"" << kW - kR
        << "\" y2=\"" << fmt(py(spec.hline))
        << "\" stroke=\"#555555\" stroke-dasharray=\"6 3\"/>\n";
    out << "<text x=\"" << kW - kR - 4 << "\" y=\"" << fmt(py(spec.hline) - 5)
        << "\" text-anchor=\"end\" font-size=\"11\" fill=\"#555555\">" << spec.hline_label
        << "</text>\n";
  }

  int ci = 0;
  for (const auto& s : spec.series) {
    const char* color = kColors[ci % 6];
    out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    for (auto [x, y] : s.points) out << fmt(px(x)) << "," << fmt(py(y)) << " ";
    out << "\"/>\n";
    for (auto [x, y] : s.points)
      out << "<circle cx=\"" << fmt(px(x)) << "\" cy=\"" << fmt(py(y)) << "\" r=\"2.5\" fill=\""
          << color << "\"/>\n";
    out << "<text x=\"" << kL + 10 << "\" y=\"" << kT + 16 + 15 * ci
        << "\" font-size=\"11\" fill=\"" << color << "\">" << s.label << "</text>\n";
    ++ci;
  }
  out << "</svg>\n";
}

void write_svg_stub(const std::string& path, const std::string& message) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH
      << "\">\n<rect width=\"" << kW << "\" height=\"" << kH << "\" fill=\"white\"/>\n"
      << "<text x=\"" << kW / 2 << "\" y=\"" << kH / 2
      << "\" text-anchor=\"middle\" font-size=\"14\">" << message << "</text>\n</svg>\n";
}

}  // namespace tmx
