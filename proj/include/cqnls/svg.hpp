#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

namespace cqnls::svg {

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

struct Chart {
  std::string title;
  std::string xlabel;
  std::string ylabel;
  bool logx = false;
  bool logy = false;
  std::vector<Series> series;
};

namespace detail {

inline std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

inline std::string escape(const std::string& s) {
  std::string o;
  for (char c : s) {
    if (c == '<') o += "&lt;";
    else if (c == '>') o += "&gt;";
    else if (c == '&') o += "&amp;";
    else o += c;
  }
  return o;
}

}  // namespace detail

/// Minimal line chart; non-finite points (and non-positive ones on log axes) are skipped.
inline std::string render(const Chart& c, int width = 640, int height = 420) {
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"};
  const double ml = 70, mr = 20, mt = 36, mb = 50;
  auto tx = [&](double v) { return c.logx ? std::log10(v) : v; };
  auto ty = [&](double v) { return c.logy ? std::log10(v) : v; };
  auto usable = [&](double x, double y) {
    return std::isfinite(x) && std::isfinite(y) && (!c.logx || x > 0) && (!c.logy || y > 0);
  };
  double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
  for (const auto& s : c.series)
    for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i)
      if (usable(s.x[i], s.y[i])) {
        x0 = std::min(x0, tx(s.x[i]));
        x1 = std::max(x1, tx(s.x[i]));
        y0 = std::min(y0, ty(s.y[i]));
        y1 = std::max(y1, ty(s.y[i]));
      }
  if (!(x1 > x0)) {
    x0 = std::isfinite(x0) ? x0 - 1 : 0;
    x1 = x0 + 2;
  }
  if (!(y1 > y0)) {
    y0 = std::isfinite(y0) ? y0 - 1 : 0;
    y1 = y0 + 2;
  }
  const double pw = width - ml - mr, ph = height - mt - mb;
  auto px = [&](double v) { return ml + (tx(v) - x0) / (x1 - x0) * pw; };
  auto py = [&](double v) { return mt + (1.0 - (ty(v) - y0) / (y1 - y0)) * ph; };
  auto untx = [&](double v) { return c.logx ? std::pow(10.0, v) : v; };
  auto unty = [&](double v) { return c.logy ? std::pow(10.0, v) : v; };

  std::string o = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(width) + "\" height=\"" +
                  std::to_string(height) + "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  o += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o += "<text x=\"" + detail::num(width / 2.0) + "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">" +
       detail::escape(c.title) + "</text>\n";
  o += "<rect x=\"" + detail::num(ml) + "\" y=\"" + detail::num(mt) + "\" width=\"" + detail::num(pw) +
       "\" height=\"" + detail::num(ph) + "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double fx = x0 + (x1 - x0) * k / 4.0, fy = y0 + (y1 - y0) * k / 4.0;
    const double gx = ml + pw * k / 4.0, gy = mt + ph * (1.0 - k / 4.0);
    o += "<text x=\"" + detail::num(gx) + "\" y=\"" + detail::num(mt + ph + 16) + "\" text-anchor=\"middle\">" +
         detail::num(untx(fx)) + "</text>\n";
    o += "<text x=\"" + detail::num(ml - 6) + "\" y=\"" + detail::num(gy + 4) + "\" text-anchor=\"end\">" +
         detail::num(unty(fy)) + "</text>\n";
  }
  o += "<text x=\"" + detail::num(ml + pw / 2) + "\" y=\"" + detail::num(height - 10.0) +
       "\" text-anchor=\"middle\">" + detail::escape(c.xlabel) + "</text>\n";
  o += "<text transform=\"translate(16," + detail::num(mt + ph / 2) + ") rotate(-90)\" text-anchor=\"middle\">" +
       detail::escape(c.ylabel) + "</text>\n";
  for (std::size_t s = 0; s < c.series.size(); ++s) {
    const auto& ser = c.series[s];
    std::string pts;
    for (std::size_t i = 0; i < ser.x.size() && i < ser.y.size(); ++i)
      if (usable(ser.x[i], ser.y[i])) pts += detail::num(px(ser.x[i])) + "," + detail::num(py(ser.y[i])) + " ";
    const char* col = colors[s % 5];
    o += "<polyline fill=\"none\" stroke=\"" + std::string(col) + "\" stroke-width=\"1.5\" points=\"" + pts + "\"/>\n";
    o += "<text x=\"" + detail::num(ml + 8) + "\" y=\"" + detail::num(mt + 16 + 14.0 * s) + "\" fill=\"" + col +
         "\">" + detail::escape(ser.label) + "</text>\n";
  }
  o += "</svg>\n";
  return o;
}

}  // namespace cqnls::svg
