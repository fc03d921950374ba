#include "plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace qmlab::plot {

namespace {

constexpr double kWidth = 640, kHeight = 400;
constexpr double kLeft = 72, kRight = 20, kTop = 40, kBottom = 52;
const char* const kColours[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", std::abs(v) < 1e-12 ? 0.0 : v);
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

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  void add(double v) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  void pad() {
    if (hi - lo <= 1e-12 * std::max(1.0, std::abs(hi))) {
      const double w = std::max(0.5, 0.1 * std::abs(hi));
      lo -= w;
      hi += w;
    }
  }
};

}  // namespace

std::string emit_plot(const Plot& p) {
  const bool semilog = p.kind == Kind::Semilog;
  std::vector<std::vector<std::pair<double, double>>> pts(p.series.size());
  Range rx, ry;
  for (std::size_t s = 0; s < p.series.size(); ++s) {
    const auto& se = p.series[s];
    if (se.xs.size() != se.ys.size()) throw PlotError("series '" + se.name + "' has mismatched x and y lengths");
    for (std::size_t i = 0; i < se.xs.size(); ++i) {
      double y = se.ys[i];
      if (semilog) {
        if (!(y > 0.0)) continue;
        y = std::log10(y);
      }
      if (!std::isfinite(se.xs[i]) || !std::isfinite(y)) continue;
      pts[s].emplace_back(se.xs[i], y);
      rx.add(se.xs[i]);
      ry.add(y);
    }
  }
  if (!(rx.lo <= rx.hi)) throw PlotError("nothing to plot");
  rx.pad();
  ry.pad();
  const double pw = kWidth - kLeft - kRight, ph = kHeight - kTop - kBottom;
  auto sx = [&](double x) { return kLeft + (x - rx.lo) / (rx.hi - rx.lo) * pw; };
  auto sy = [&](double y) { return kTop + ph - (y - ry.lo) / (ry.hi - ry.lo) * ph; };

  std::string o;
  o += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"400\" viewBox=\"0 0 640 400\" "
       "font-family=\"sans-serif\" font-size=\"12\">\n";
  o += "<rect width=\"640\" height=\"400\" fill=\"white\"/>\n";
  o += "<text x=\"320\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" + escape(p.title) + "</text>\n";
  o += "<rect x=\"" + num(kLeft) + "\" y=\"" + num(kTop) + "\" width=\"" + num(pw) + "\" height=\"" + num(ph) +
       "\" fill=\"none\" stroke=\"black\"/>\n";

  for (int i = 0; i <= 4; ++i) {
    const double xv = rx.lo + (rx.hi - rx.lo) * i / 4.0, yv = ry.lo + (ry.hi - ry.lo) * i / 4.0;
    const std::string X = num(sx(xv)), Y = num(sy(yv));
    o += "<line x1=\"" + X + "\" y1=\"" + num(kTop + ph) + "\" x2=\"" + X + "\" y2=\"" + num(kTop + ph + 5) +
         "\" stroke=\"black\"/>\n";
    o += "<text x=\"" + X + "\" y=\"" + num(kTop + ph + 18) + "\" text-anchor=\"middle\">" + tick(xv) + "</text>\n";
    o += "<line x1=\"" + num(kLeft - 5) + "\" y1=\"" + Y + "\" x2=\"" + num(kLeft) + "\" y2=\"" + Y +
         "\" stroke=\"black\"/>\n";
    const std::string label = semilog ? "1e" + tick(yv) : tick(yv);
    o += "<text x=\"" + num(kLeft - 8) + "\" y=\"" + num(sy(yv) + 4) + "\" text-anchor=\"end\">" + label + "</text>\n";
  }
  o += "<text x=\"" + num(kLeft + pw / 2) + "\" y=\"" + num(kHeight - 10) + "\" text-anchor=\"middle\">" +
       escape(p.xlabel) + "</text>\n";
  o += "<text x=\"16\" y=\"" + num(kTop + ph / 2) + "\" text-anchor=\"middle\" transform=\"rotate(-90 16 " +
       num(kTop + ph / 2) + ")\">" + escape(semilog ? p.ylabel + " (log10)" : p.ylabel) + "</text>\n";

  for (std::size_t s = 0; s < p.series.size(); ++s) {
    const std::string colour = kColours[s % (sizeof kColours / sizeof *kColours)];
    const auto& se = p.series[s];
    if (pts[s].size() > 1) {
      o += "<polyline fill=\"none\" stroke=\"" + colour + "\" stroke-width=\"1.5\"";
      if (se.dashed) o += " stroke-dasharray=\"6 4\"";
      o += " points=\"";
      for (std::size_t i = 0; i < pts[s].size(); ++i)
        o += (i ? " " : "") + num(sx(pts[s][i].first)) + "," + num(sy(pts[s][i].second));
      o += "\"/>\n";
    }
    if (se.markers || pts[s].size() == 1)
      for (const auto& [x, y] : pts[s])
        o += "<circle cx=\"" + num(sx(x)) + "\" cy=\"" + num(sy(y)) + "\" r=\"3\" fill=\"" + colour + "\"/>\n";
    const double ly = kTop + 16 + 16 * static_cast<double>(s);
    o += "<line x1=\"" + num(kLeft + pw - 190) + "\" y1=\"" + num(ly - 4) + "\" x2=\"" + num(kLeft + pw - 170) +
         "\" y2=\"" + num(ly - 4) + "\" stroke=\"" + colour + "\" stroke-width=\"2\"/>\n";
    o += "<text x=\"" + num(kLeft + pw - 164) + "\" y=\"" + num(ly) + "\">" + escape(se.name) + "</text>\n";
  }
  o += "</svg>\n";
  return o;
}

}  // namespace qmlab::plot
