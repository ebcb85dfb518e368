#include "slipopt/svg_plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

namespace slipopt {

namespace {

const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

std::string fmt(const char* pattern, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, pattern, v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string s_label_or_index(const std::string& label, std::size_t k) {
  return label.empty() ? "series " + std::to_string(k + 1) : label;
}

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  void add(double v) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  void pad() {
    if (!std::isfinite(lo)) {
      lo = 0.0;
      hi = 1.0;
    } else if (hi == lo) {
      lo -= 0.5;
      hi += 0.5;
    }
  }
};

}  // namespace

std::string render_svg(const std::vector<PlotSeries>& series, const PlotOptions& options) {
  const double left = 80, right = 170, top = 40, bottom = 60;
  const double w = options.width, h = options.height;
  const double pw = w - left - right, ph = h - top - bottom;

  Range rx, ry;
  for (const PlotSeries& s : series) {
    if (s.x.size() != s.y.size()) throw std::invalid_argument("render_svg: series '" + s.label + "' has mismatched x/y");
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (options.log_y && !(s.y[i] > 0.0)) {
        throw std::invalid_argument("render_svg: log scale needs positive values; series '" + s.label +
                                    "' has " + fmt("%.6g", s.y[i]) + " at x = " + fmt("%.6g", s.x[i]));
      }
      rx.add(s.x[i]);
      ry.add(options.log_y ? std::log10(s.y[i]) : s.y[i]);
    }
  }
  rx.pad();
  ry.pad();
  auto px = [&](double v) { return left + (v - rx.lo) / (rx.hi - rx.lo) * pw; };
  auto py = [&](double v) { return top + ph - ((options.log_y ? std::log10(v) : v) - ry.lo) / (ry.hi - ry.lo) * ph; };

  std::string out;
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt("%.0f", w) + "\" height=\"" + fmt("%.0f", h) +
         "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (!options.title.empty()) {
    out += "<text x=\"" + fmt("%.1f", left + pw / 2) + "\" y=\"24\" text-anchor=\"middle\" font-size=\"14\">" +
           escape(options.title) + "</text>\n";
  }
  // Axes and ticks.
  out += "<g class=\"axes\" stroke=\"black\" fill=\"none\">\n";
  out += "<line x1=\"" + fmt("%.1f", left) + "\" y1=\"" + fmt("%.1f", top + ph) + "\" x2=\"" + fmt("%.1f", left + pw) +
         "\" y2=\"" + fmt("%.1f", top + ph) + "\"/>\n";
  out += "<line x1=\"" + fmt("%.1f", left) + "\" y1=\"" + fmt("%.1f", top) + "\" x2=\"" + fmt("%.1f", left) +
         "\" y2=\"" + fmt("%.1f", top + ph) + "\"/>\n";
  out += "</g>\n<g class=\"ticks\" fill=\"black\">\n";
  for (int k = 0; k <= 4; ++k) {
    const double fx = rx.lo + (rx.hi - rx.lo) * k / 4.0;
    const double x = left + pw * k / 4.0;
    out += "<text x=\"" + fmt("%.1f", x) + "\" y=\"" + fmt("%.1f", top + ph + 18) + "\" text-anchor=\"middle\">" +
           fmt("%.4g", fx) + "</text>\n";
    const double fy = ry.lo + (ry.hi - ry.lo) * k / 4.0;
    const double y = top + ph - ph * k / 4.0;
    const std::string label = options.log_y ? fmt("%.3g", std::pow(10.0, fy)) : fmt("%.4g", fy);
    out += "<text x=\"" + fmt("%.1f", left - 6) + "\" y=\"" + fmt("%.1f", y + 4) + "\" text-anchor=\"end\">" + label +
           "</text>\n";
  }
  out += "</g>\n";
  out += "<text x=\"" + fmt("%.1f", left + pw / 2) + "\" y=\"" + fmt("%.1f", h - 16) + "\" text-anchor=\"middle\">" +
         escape(options.x_label) + "</text>\n";
  out += "<text x=\"18\" y=\"" + fmt("%.1f", top + ph / 2) + "\" text-anchor=\"middle\" transform=\"rotate(-90 18 " +
         fmt("%.1f", top + ph / 2) + ")\">" + escape(options.y_label) + (options.log_y ? " (log)" : "") + "</text>\n";

  for (std::size_t k = 0; k < series.size(); ++k) {
    const PlotSeries& s = series[k];
    const char* color = kPalette[k % (sizeof kPalette / sizeof kPalette[0])];
    out += "<polyline class=\"series\" fill=\"none\" stroke=\"" + std::string(color) + "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (i) out += ' ';
      out += fmt("%.2f", px(s.x[i])) + "," + fmt("%.2f", py(s.y[i]));
    }
    out += "\"/>\n";
  }

  out += "<g class=\"legend\">\n";
  for (std::size_t k = 0; k < series.size(); ++k) {
    const char* color = kPalette[k % (sizeof kPalette / sizeof kPalette[0])];
    const double y = top + 10 + 18.0 * static_cast<double>(k);
    const double x = left + pw + 16;
    out += "<g class=\"legend-entry\"><line x1=\"" + fmt("%.1f", x) + "\" y1=\"" + fmt("%.1f", y) + "\" x2=\"" +
           fmt("%.1f", x + 20) + "\" y2=\"" + fmt("%.1f", y) + "\" stroke=\"" + color +
           "\" stroke-width=\"2\"/><text x=\"" + fmt("%.1f", x + 26) + "\" y=\"" + fmt("%.1f", y + 4) + "\">" +
           escape(s_label_or_index(series[k].label, k)) + "</text></g>\n";
  }
  out += "</g>\n</svg>\n";
  return out;
}

}  // namespace slipopt
