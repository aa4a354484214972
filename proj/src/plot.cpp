#include "kdpc/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace kdpc {

namespace {

constexpr double kWidth = 760.0;
constexpr double kPanelHeight = 180.0;
constexpr double kLeft = 70.0;
constexpr double kRight = 150.0;
constexpr double kTop = 40.0;
constexpr double kGap = 30.0;
constexpr double kBottom = 45.0;

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", std::abs(v) < 1e-12 ? 0.0 : v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (const char c : s) {
    switch (c) {
      case '&':
        out += "&amp;";
        break;
      case '<':
        out += "&lt;";
        break;
      case '>':
        out += "&gt;";
        break;
      case '"':
        out += "&quot;";
        break;
      default:
        out += c;
    }
  }
  return out;
}

// Roughly five ticks at 1, 2 or 5 times a power of ten.
double nice_step(double span) {
  if (!(span > 0.0)) return 1.0;
  const double raw = span / 5.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  const double f = raw / mag;
  return (f < 1.5 ? 1.0 : f < 3.5 ? 2.0 : f < 7.5 ? 5.0 : 10.0) * mag;
}

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  void add(double v) {
    if (!std::isfinite(v)) return;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  void finish() {
    if (!std::isfinite(lo)) {
      lo = 0.0;
      hi = 1.0;
    }
    if (hi - lo < 1e-9) {
      lo -= 0.5;
      hi += 0.5;
    }
    const double pad = 0.05 * (hi - lo);
    lo -= pad;
    hi += pad;
  }
};

}  // namespace

std::string render_svg(const std::string& title, const std::string& xlabel,
                       const std::vector<PlotPanel>& panels) {
  const double plot_w = kWidth - kLeft - kRight;
  const double height = kTop + static_cast<double>(panels.size()) * (kPanelHeight + kGap) + kBottom;

  Range xr;
  for (const auto& p : panels) {
    for (const auto& s : p.series) {
      for (const double v : s.x) xr.add(v);
    }
  }
  if (!std::isfinite(xr.lo)) {
    xr.lo = 0.0;
    xr.hi = 1.0;
  }
  if (xr.hi - xr.lo < 1e-9) xr.hi = xr.lo + 1.0;
  auto sx = [&](double x) { return kLeft + (x - xr.lo) / (xr.hi - xr.lo) * plot_w; };

  std::string svg = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(kWidth) +
                    "\" height=\"" + num(height) + "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg += "<text x=\"" + num(kWidth / 2) + "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" +
         escape(title) + "</text>\n";

  for (std::size_t pi = 0; pi < panels.size(); ++pi) {
    const auto& panel = panels[pi];
    const double top = kTop + static_cast<double>(pi) * (kPanelHeight + kGap);
    Range yr;
    for (const auto& s : panel.series) {
      for (const double v : s.y) yr.add(v);
    }
    yr.finish();
    auto sy = [&](double y) { return top + (yr.hi - y) / (yr.hi - yr.lo) * kPanelHeight; };

    svg += "<rect x=\"" + num(kLeft) + "\" y=\"" + num(top) + "\" width=\"" + num(plot_w) +
           "\" height=\"" + num(kPanelHeight) + "\" fill=\"none\" stroke=\"#444\"/>\n";
    const double ys = nice_step(yr.hi - yr.lo);
    for (double v = std::ceil(yr.lo / ys) * ys; v <= yr.hi; v += ys) {
      svg += "<line x1=\"" + num(kLeft) + "\" x2=\"" + num(kLeft + plot_w) + "\" y1=\"" +
             num(sy(v)) + "\" y2=\"" + num(sy(v)) + "\" stroke=\"#ddd\"/>\n";
      svg += "<text x=\"" + num(kLeft - 6) + "\" y=\"" + num(sy(v) + 4) +
             "\" text-anchor=\"end\">" + tick_label(v) + "</text>\n";
    }
    const double xs = nice_step(xr.hi - xr.lo);
    for (double v = std::ceil(xr.lo / xs) * xs; v <= xr.hi + 1e-9; v += xs) {
      svg += "<line x1=\"" + num(sx(v)) + "\" x2=\"" + num(sx(v)) + "\" y1=\"" + num(top) +
             "\" y2=\"" + num(top + kPanelHeight) + "\" stroke=\"#eee\"/>\n";
      if (pi + 1 == panels.size()) {
        svg += "<text x=\"" + num(sx(v)) + "\" y=\"" + num(top + kPanelHeight + 15) +
               "\" text-anchor=\"middle\">" + tick_label(v) + "</text>\n";
      }
    }
    svg += "<text transform=\"translate(16," + num(top + kPanelHeight / 2) +
           ") rotate(-90)\" text-anchor=\"middle\">" + escape(panel.ylabel) + "</text>\n";

    for (std::size_t si = 0; si < panel.series.size(); ++si) {
      const auto& s = panel.series[si];
      std::string pts;
      const std::size_t n = std::min(s.x.size(), s.y.size());
      for (std::size_t i = 0; i < n; ++i) {
        if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
        pts += num(sx(s.x[i])) + "," + num(sy(std::clamp(s.y[i], yr.lo, yr.hi))) + " ";
      }
      svg += "<polyline fill=\"none\" stroke=\"" + s.color + "\" stroke-width=\"1.5\"" +
             (s.dashed ? " stroke-dasharray=\"6,4\"" : "") + " points=\"" + pts + "\"/>\n";
      const double ly = top + 14.0 + 16.0 * static_cast<double>(si);
      svg += "<line x1=\"" + num(kLeft + plot_w + 10) + "\" x2=\"" + num(kLeft + plot_w + 34) +
             "\" y1=\"" + num(ly - 4) + "\" y2=\"" + num(ly - 4) + "\" stroke=\"" + s.color +
             "\" stroke-width=\"2\"" + (s.dashed ? " stroke-dasharray=\"6,4\"" : "") + "/>\n";
      svg += "<text x=\"" + num(kLeft + plot_w + 40) + "\" y=\"" + num(ly) + "\">" +
             escape(s.label) + "</text>\n";
    }
  }
  const double bottom = kTop + static_cast<double>(panels.size()) * (kPanelHeight + kGap);
  svg += "<text x=\"" + num(kLeft + plot_w / 2) + "\" y=\"" + num(bottom + 18) +
         "\" text-anchor=\"middle\">" + escape(xlabel) + "</text>\n";
  svg += "</svg>\n";
  return svg;
}

}  // namespace kdpc
