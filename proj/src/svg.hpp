#pragma once

// Minimal SVG plotting for report files.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

namespace elc::svg {

inline std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

struct Axis {
  double lo = 0.0;
  double hi = 1.0;
  bool log = false;

  [[nodiscard]] double map(double v) const {
    if (log) return (std::log10(v) - std::log10(lo)) / (std::log10(hi) - std::log10(lo));
    return (v - lo) / (hi - lo);
  }
};

inline Axis fit_axis(const std::vector<double>& values, bool want_log) {
  Axis a;
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  bool positive = true;
  for (double v : values) {
    if (!std::isfinite(v)) continue;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
    positive = positive && v > 0.0;
  }
  if (!std::isfinite(lo)) return a;
  a.log = want_log && positive;
  if (a.log) {
    a.lo = std::pow(10.0, std::floor(std::log10(lo)));
    a.hi = std::pow(10.0, std::ceil(std::log10(hi)));
    if (a.hi <= a.lo) a.hi = a.lo * 10.0;
  } else {
    const double pad = hi > lo ? 0.05 * (hi - lo) : std::max(1e-12, 0.05 * std::abs(hi));
    a.lo = lo - pad;
    a.hi = hi + pad;
  }
  return a;
}

/// One plotting panel placed at (ox, oy) with size (w, h).
class Panel {
 public:
  Panel(double ox, double oy, double w, double h, Axis x, Axis y) : ox_(ox), oy_(oy), w_(w), h_(h), x_(x), y_(y) {}

  [[nodiscard]] double px(double v) const { return ox_ + x_.map(v) * w_; }
  [[nodiscard]] double py(double v) const { return oy_ + h_ - y_.map(v) * h_; }

  void frame(std::ostringstream& out, const std::string& xlabel, const std::string& ylabel) const {
    out << "<rect x=\"" << num(ox_) << "\" y=\"" << num(oy_) << "\" width=\"" << num(w_) << "\" height=\""
        << num(h_) << "\" fill=\"none\" stroke=\"#333\"/>\n";
    for (int i = 0; i <= 4; ++i) {
      const double fx = i / 4.0;
      const double vx = x_.log ? std::pow(10.0, std::log10(x_.lo) + fx * (std::log10(x_.hi) - std::log10(x_.lo)))
                               : x_.lo + fx * (x_.hi - x_.lo);
      const double vy = y_.log ? std::pow(10.0, std::log10(y_.lo) + fx * (std::log10(y_.hi) - std::log10(y_.lo)))
                               : y_.lo + fx * (y_.hi - y_.lo);
      out << "<text x=\"" << num(ox_ + fx * w_) << "\" y=\"" << num(oy_ + h_ + 14)
          << "\" font-size=\"10\" text-anchor=\"middle\">" << num(vx) << "</text>\n";
      out << "<text x=\"" << num(ox_ - 4) << "\" y=\"" << num(oy_ + h_ - fx * h_ + 3)
          << "\" font-size=\"10\" text-anchor=\"end\">" << num(vy) << "</text>\n";
    }
    out << "<text x=\"" << num(ox_ + 0.5 * w_) << "\" y=\"" << num(oy_ + h_ + 30)
        << "\" font-size=\"12\" text-anchor=\"middle\">" << xlabel << "</text>\n";
    out << "<text x=\"" << num(ox_ - 48) << "\" y=\"" << num(oy_ + 0.5 * h_) << "\" font-size=\"12\" transform=\"rotate(-90 "
        << num(ox_ - 48) << ' ' << num(oy_ + 0.5 * h_) << ")\" text-anchor=\"middle\">" << ylabel << "</text>\n";
  }

 private:
  double ox_, oy_, w_, h_;
  Axis x_, y_;
};

inline std::string header(double w, double h) {
  return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(w) + "\" height=\"" + num(h) +
         "\" viewBox=\"0 0 " + num(w) + ' ' + num(h) + "\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
}

}  // namespace elc::svg
