#pragma once

// Minimal deterministic SVG line and stacked-area charts. Coordinates are
// printed with two decimals so identical input gives identical bytes.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <limits>
#include <string>
#include <vector>

#include "terrabench/io_util.hpp"

namespace terrabench::svg {

inline constexpr double kWidth = 960.0;
inline constexpr double kHeight = 540.0;

struct Series {
  std::string label;
  std::string colour;
  std::vector<double> y;  // one value per x; non-finite values break the line
  bool dashed = false;
};

struct Layer {
  std::string label;
  std::string colour;
  std::vector<double> y;  // stacked in order, first layer at the bottom
};

struct Axes {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<double> x;
  double y_min = 0.0;
  double y_max = 1.0;
  bool log_x = false;
};

namespace detail {

inline constexpr double kLeft = 80.0;
inline constexpr double kRight = 200.0;
inline constexpr double kTop = 40.0;
inline constexpr double kBottom = 60.0;

inline std::string escape(const std::string& s) {
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

inline std::string num(double v) { return format_fixed(v, 2); }

class Frame {
 public:
  explicit Frame(const Axes& axes) : axes_(axes) {
    if (!axes_.x.empty()) {
      x_min_ = axes_.x.front();
      x_max_ = axes_.x.back();
    }
    if (axes_.log_x) {
      x_min_ = std::log10(std::max(x_min_, 1e-300));
      x_max_ = std::log10(std::max(x_max_, 1e-300));
    }
    if (x_max_ <= x_min_) x_max_ = x_min_ + 1.0;
    y_min_ = axes_.y_min;
    y_max_ = axes_.y_max > axes_.y_min ? axes_.y_max : axes_.y_min + 1.0;
  }

  double px(double x) const {
    const double v = axes_.log_x ? std::log10(std::max(x, 1e-300)) : x;
    return kLeft + (v - x_min_) / (x_max_ - x_min_) * (kWidth - kLeft - kRight);
  }
  double py(double y) const {
    const double c = std::clamp(y, y_min_, y_max_);
    return kHeight - kBottom - (c - y_min_) / (y_max_ - y_min_) * (kHeight - kTop - kBottom);
  }

  std::string open() const {
    std::string s = "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 960 540\" width=\"960\" height=\"540\">\n";
    s += "<rect x=\"0\" y=\"0\" width=\"960\" height=\"540\" fill=\"#ffffff\"/>\n";
    s += "<text x=\"480\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"16\">" +
         escape(axes_.title) + "</text>\n";
    const double x0 = kLeft;
    const double x1 = kWidth - kRight;
    const double y0 = kHeight - kBottom;
    const double y1 = kTop;
    s += "<g stroke=\"#000000\" stroke-width=\"1\" fill=\"none\">\n";
    s += "<line x1=\"" + num(x0) + "\" y1=\"" + num(y0) + "\" x2=\"" + num(x1) + "\" y2=\"" + num(y0) + "\"/>\n";
    s += "<line x1=\"" + num(x0) + "\" y1=\"" + num(y0) + "\" x2=\"" + num(x0) + "\" y2=\"" + num(y1) + "\"/>\n";
    s += "</g>\n<g font-family=\"sans-serif\" font-size=\"11\" fill=\"#000000\">\n";
    for (int k = 0; k <= 5; ++k) {
      const double fx = x_min_ + (x_max_ - x_min_) * k / 5.0;
      const double label = axes_.log_x ? std::pow(10.0, fx) : fx;
      const double sx = x0 + (x1 - x0) * k / 5.0;
      s += "<text x=\"" + num(sx) + "\" y=\"" + num(y0 + 16) + "\" text-anchor=\"middle\">" + tick(label) +
           "</text>\n";
      const double fy = y_min_ + (y_max_ - y_min_) * k / 5.0;
      const double sy = y0 - (y0 - y1) * k / 5.0;
      s += "<text x=\"" + num(x0 - 6) + "\" y=\"" + num(sy + 4) + "\" text-anchor=\"end\">" + tick(fy) + "</text>\n";
    }
    s += "<text x=\"" + num((x0 + x1) / 2) + "\" y=\"" + num(kHeight - 16) + "\" text-anchor=\"middle\">" +
         escape(axes_.x_label) + "</text>\n";
    s += "<text x=\"18\" y=\"" + num((y0 + y1) / 2) + "\" text-anchor=\"middle\" transform=\"rotate(-90 18 " +
         num((y0 + y1) / 2) + ")\">" + escape(axes_.y_label) + "</text>\n</g>\n";
    return s;
  }

  static std::string legend(std::size_t i, const std::string& label, const std::string& colour) {
    const double y = kTop + 10 + 18.0 * static_cast<double>(i);
    const double x = kWidth - kRight + 16;
    return "<rect x=\"" + num(x) + "\" y=\"" + num(y - 9) + "\" width=\"12\" height=\"12\" fill=\"" + colour +
           "\"/>\n<text x=\"" + num(x + 18) + "\" y=\"" + num(y + 1) +
           "\" font-family=\"sans-serif\" font-size=\"11\">" + escape(label) + "</text>\n";
  }

 private:
  static std::string tick(double v) {
    const double a = std::abs(v);
    if (a != 0.0 && (a >= 1e5 || a < 1e-2)) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.2e", v);
      return buf;
    }
    return format_fixed(v, a >= 100 ? 0 : 2);
  }

  const Axes& axes_;
  double x_min_ = 0.0;
  double x_max_ = 1.0;
  double y_min_ = 0.0;
  double y_max_ = 1.0;
};

}  // namespace detail

inline std::string line_chart(const Axes& axes, const std::vector<Series>& series) {
  detail::Frame f(axes);
  std::string s = f.open();
  for (std::size_t i = 0; i < series.size(); ++i) {
    const auto& ser = series[i];
    std::string points;
    auto flush = [&] {
      if (points.empty()) return;
      s += "<polyline fill=\"none\" stroke=\"" + ser.colour + "\" stroke-width=\"1.5\"" +
           (ser.dashed ? " stroke-dasharray=\"4 3\"" : "") + " points=\"" + points + "\"/>\n";
      points.clear();
    };
    for (std::size_t k = 0; k < ser.y.size() && k < axes.x.size(); ++k) {
      if (!std::isfinite(ser.y[k])) {
        flush();
        continue;
      }
      if (!points.empty()) points += ' ';
      points += detail::num(f.px(axes.x[k])) + "," + detail::num(f.py(ser.y[k]));
    }
    flush();
    s += detail::Frame::legend(i, ser.label, ser.colour);
  }
  return s + "</svg>\n";
}

inline std::string stacked_area_chart(const Axes& axes, const std::vector<Layer>& layers) {
  detail::Frame f(axes);
  std::string s = f.open();
  const std::size_t n = axes.x.size();
  std::vector<double> base(n, axes.y_min);
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& layer = layers[i];
    std::vector<double> top(n);
    for (std::size_t k = 0; k < n; ++k) top[k] = base[k] + (k < layer.y.size() ? layer.y[k] : 0.0);
    std::string points;
    for (std::size_t k = 0; k < n; ++k) {
      if (!points.empty()) points += ' ';
      points += detail::num(f.px(axes.x[k])) + "," + detail::num(f.py(top[k]));
    }
    for (std::size_t k = n; k-- > 0;) points += " " + detail::num(f.px(axes.x[k])) + "," + detail::num(f.py(base[k]));
    s += "<polygon fill=\"" + layer.colour + "\" stroke=\"none\" points=\"" + points + "\"/>\n";
    s += detail::Frame::legend(i, layer.label, layer.colour);
    base = std::move(top);
  }
  return s + "</svg>\n";
}

}  // namespace terrabench::svg
