#pragma once

// Minimal self-contained SVG charts: line overlays and a heatmap.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace exclab::cli {

struct Series {
  std::string label;
  std::vector<double> x, y;
  std::vector<double> err;  // optional +-err whiskers
  bool markers = false;
  bool dashed = false;
};

namespace svg_detail {

inline const char* palette(std::size_t i) {
  static const char* c[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#17becf", "#7f7f7f"};
  return c[i % 8];
}

inline std::string esc(const std::string& s) {
  std::string o;
  for (char ch : s) {
    if (ch == '<') o += "&lt;";
    else if (ch == '>') o += "&gt;";
    else if (ch == '&') o += "&amp;";
    else o += ch;
  }
  return o;
}

inline std::string num(double v) {
  char b[32];
  std::snprintf(b, sizeof b, "%.4g", v);
  return b;
}

}  // namespace svg_detail

inline std::string line_chart(const std::string& title, const std::string& xlabel, const std::string& ylabel,
                              const std::vector<Series>& series) {
  using namespace svg_detail;
  const double W = 640, H = 420, L = 64, R = 170, T = 36, B = 48;
  double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
  for (const auto& s : series)
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.y[i])) continue;
      const double e = s.err.empty() ? 0.0 : s.err[i];
      x0 = std::min(x0, s.x[i]);
      x1 = std::max(x1, s.x[i]);
      y0 = std::min(y0, s.y[i] - e);
      y1 = std::max(y1, s.y[i] + e);
    }
  if (!(x1 > x0)) { x0 -= 0.5; x1 += 0.5; }
  if (!(y1 > y0)) { y0 -= 0.5; y1 += 0.5; }
  const double pad = 0.05 * (y1 - y0);
  y0 -= pad;
  y1 += pad;
  auto px = [&](double x) { return L + (x - x0) / (x1 - x0) * (W - L - R); };
  auto py = [&](double y) { return H - B - (y - y0) / (y1 - y0) * (H - T - B); };

  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << W / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"13\">" << esc(title) << "</text>\n";
  o << "<rect x=\"" << L << "\" y=\"" << T << "\" width=\"" << W - L - R << "\" height=\"" << H - T - B
    << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 5; ++k) {
    const double xv = x0 + (x1 - x0) * k / 5, yv = y0 + (y1 - y0) * k / 5;
    o << "<text x=\"" << px(xv) << "\" y=\"" << H - B + 14 << "\" text-anchor=\"middle\">" << num(xv) << "</text>\n";
    o << "<text x=\"" << L - 4 << "\" y=\"" << py(yv) + 4 << "\" text-anchor=\"end\">" << num(yv) << "</text>\n";
    o << "<line x1=\"" << L << "\" x2=\"" << W - R << "\" y1=\"" << py(yv) << "\" y2=\"" << py(yv)
      << "\" stroke=\"#ddd\"/>\n";
  }
  o << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 10 << "\" text-anchor=\"middle\">" << esc(xlabel) << "</text>\n";
  o << "<text x=\"14\" y=\"" << (T + H - B) / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 14 " << (T + H - B) / 2
    << ")\">" << esc(ylabel) << "</text>\n";
  for (std::size_t si = 0; si < series.size(); ++si) {
    const auto& s = series[si];
    const char* col = palette(si);
    if (s.markers) {
      for (std::size_t i = 0; i < s.x.size(); ++i) {
        if (!std::isfinite(s.y[i])) continue;
        if (!s.err.empty())
          o << "<line x1=\"" << px(s.x[i]) << "\" x2=\"" << px(s.x[i]) << "\" y1=\"" << py(s.y[i] - s.err[i]) << "\" y2=\""
            << py(s.y[i] + s.err[i]) << "\" stroke=\"" << col << "\"/>\n";
        o << "<circle cx=\"" << px(s.x[i]) << "\" cy=\"" << py(s.y[i]) << "\" r=\"2\" fill=\"" << col << "\"/>\n";
      }
    } else {
      o << "<polyline fill=\"none\" stroke=\"" << col << "\" stroke-width=\"1.5\"" << (s.dashed ? " stroke-dasharray=\"5,3\"" : "")
        << " points=\"";
      for (std::size_t i = 0; i < s.x.size(); ++i)
        if (std::isfinite(s.y[i])) o << px(s.x[i]) << "," << py(s.y[i]) << " ";
      o << "\"/>\n";
    }
    const double ly = T + 14 + 16.0 * static_cast<double>(si);
    o << "<rect x=\"" << W - R + 10 << "\" y=\"" << ly - 8 << "\" width=\"12\" height=\"8\" fill=\"" << col << "\"/>\n";
    o << "<text x=\"" << W - R + 26 << "\" y=\"" << ly << "\">" << esc(s.label) << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

/// Square matrix m[i][j], i rows top to bottom; blue negative, red positive.
inline std::string heatmap(const std::string& title, const std::vector<std::vector<double>>& m, const std::string& axis) {
  using namespace svg_detail;
  const std::size_t n = m.size();
  const double S = 420, L = 50, T = 36, R = 90;
  double amax = 0.0;
  for (const auto& r : m)
    for (double v : r)
      if (std::isfinite(v)) amax = std::max(amax, std::abs(v));
  if (amax == 0.0) amax = 1.0;
  auto color = [&](double v) {
    const double u = std::clamp(v / amax, -1.0, 1.0);
    const int a = static_cast<int>(std::lround(255 * (1 - std::abs(u))));
    char b[16];
    if (u < 0) std::snprintf(b, sizeof b, "#%02x%02xff", a, a);
    else std::snprintf(b, sizeof b, "#ff%02x%02x", a, a);
    return std::string(b);
  };
  const double c = n ? S / static_cast<double>(n) : S;
  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << L + S + R << "\" height=\"" << T + S + 30
    << "\" font-family=\"sans-serif\" font-size=\"11\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << L + S / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"13\">" << esc(title) << "</text>\n";
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      o << "<rect x=\"" << L + c * j << "\" y=\"" << T + c * i << "\" width=\"" << c + 0.05 << "\" height=\"" << c + 0.05
        << "\" fill=\"" << (std::isfinite(m[i][j]) ? color(m[i][j]) : "#eee") << "\"/>\n";
  o << "<text x=\"" << L + S / 2 << "\" y=\"" << T + S + 20 << "\" text-anchor=\"middle\">" << esc(axis) << "</text>\n";
  o << "<text x=\"" << L + S + 10 << "\" y=\"" << T + 12 << "\">max " << num(amax) << "</text>\n";
  o << "<text x=\"" << L + S + 10 << "\" y=\"" << T + 28 << "\" fill=\"#d62728\">+ red</text>\n";
  o << "<text x=\"" << L + S + 10 << "\" y=\"" << T + 44 << "\" fill=\"#1f77b4\">- blue</text>\n";
  o << "</svg>\n";
  return o.str();
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream f(path);
  f << content;
}

}  // namespace exclab::cli
