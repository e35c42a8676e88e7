#pragma once

// Plot data: best-so-far convergence matrix with padding, column summaries,
// height-band counts, closest-distance variant and ERT-vs-target curves.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "terrabench/bands.hpp"
#include "terrabench/harness.hpp"
#include "terrabench/io_util.hpp"
#include "terrabench/measures.hpp"
#include "terrabench/svg.hpp"

namespace terrabench {

/// N x T_max matrix of best-so-far values; rows of successful runs are padded
/// with their last value.
struct ConvergenceMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;  // row-major
  std::vector<std::uint8_t> padded;
  std::vector<std::size_t> lengths;  // evaluations actually made per row

  double operator()(std::size_t i, std::size_t j) const { return values[i * cols + j]; }
  std::span<const double> row(std::size_t i) const { return {values.data() + i * cols, cols}; }
};

namespace detail {

template <class Value, class Better>
ConvergenceMatrix running_best(const std::vector<EvalTrace>& traces, std::size_t T_max, Value value, Better better) {
  if (T_max < 1) throw ConfigError("T_max must be >= 1");
  ConvergenceMatrix m;
  m.rows = traces.size();
  m.cols = T_max;
  m.values.resize(m.rows * m.cols);
  m.padded.resize(m.rows);
  m.lengths.resize(m.rows);
  for (std::size_t i = 0; i < traces.size(); ++i) {
    const auto& evals = traces[i].evals;
    if (evals.empty()) throw std::invalid_argument("convergence matrix needs nonempty traces");
    const std::size_t n = std::min(evals.size(), T_max);
    m.lengths[i] = n;
    m.padded[i] = n < T_max;
    double best = value(evals[0]);
    for (std::size_t j = 0; j < T_max; ++j) {
      if (j < n) {
        const double v = value(evals[j]);
        if (better(v, best)) best = v;
      }
      m.values[i * T_max + j] = best;
    }
  }
  return m;
}

}  // namespace detail

/// F[i][j] = max height among the first j+1 evaluations of run i.
inline ConvergenceMatrix convergence_matrix(const std::vector<EvalTrace>& traces, std::size_t T_max) {
  return detail::running_best(
      traces, T_max, [](const Evaluation& e) { return e.h; }, [](double a, double b) { return a > b; });
}

/// Closest distance to `target` among the first j+1 evaluations.
inline ConvergenceMatrix distance_matrix(const std::vector<EvalTrace>& traces, std::array<double, 2> target,
                                         std::size_t T_max) {
  return detail::running_best(
      traces, T_max, [&](const Evaluation& e) { return std::hypot(e.x - target[0], e.y - target[1]); },
      [](double a, double b) { return a < b; });
}

struct ColumnSummary {
  double mean = 0.0;
  double min = 0.0;
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
  double max = 0.0;
};

/// Quantile of sorted data by linear interpolation at position (n - 1) q.
inline double quantile_sorted(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw std::invalid_argument("quantile of empty data");
  const double pos = (static_cast<double>(sorted.size()) - 1.0) * q;
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + (sorted[hi] - sorted[lo]) * frac;
}

inline std::vector<ColumnSummary> aggregate_summary(const ConvergenceMatrix& m) {
  if (m.rows == 0) throw std::invalid_argument("aggregate summary of an empty matrix");
  std::vector<ColumnSummary> out(m.cols);
  std::vector<double> col(m.rows);
  for (std::size_t j = 0; j < m.cols; ++j) {
    double sum = 0.0;
    for (std::size_t i = 0; i < m.rows; ++i) {
      col[i] = m(i, j);
      sum += col[i];
    }
    std::sort(col.begin(), col.end());
    out[j] = {sum / static_cast<double>(m.rows), col.front(), quantile_sorted(col, 0.25), quantile_sorted(col, 0.5),
              quantile_sorted(col, 0.75), col.back()};
  }
  return out;
}

/// counts[j][b] = entries of column j in band b; the extra last slot counts
/// entries outside every band, so each column sums to N.
inline std::vector<std::vector<std::size_t>> height_band_counts(const ConvergenceMatrix& m,
                                                                const ScoreSchedule& bands) {
  std::vector<std::vector<std::size_t>> counts(m.cols, std::vector<std::size_t>(bands.size() + 1, 0));
  for (std::size_t i = 0; i < m.rows; ++i) {
    for (std::size_t j = 0; j < m.cols; ++j) {
      const auto b = bands.band_index(m(i, j));
      ++counts[j][b ? *b : bands.size()];
    }
  }
  return counts;
}

/// Padded entries lying at or above f_target: the part of the success-band area
/// contributed after each successful run ends. Equals N * HV.
inline std::uint64_t padded_success_area(const ConvergenceMatrix& m, double f_target) {
  std::uint64_t area = 0;
  for (std::size_t i = 0; i < m.rows; ++i) {
    for (std::size_t j = m.lengths[i]; j < m.cols; ++j) area += m(i, j) >= f_target ? 1 : 0;
  }
  return area;
}

struct ErtPoint {
  double target = 0.0;
  double ert = kInf;
};

/// ERT per target, reclassifying each run by its prefix within T_max.
inline std::vector<ErtPoint> ert_curve(const std::vector<EvalTrace>& traces, const RunConfig& config,
                                       std::span<const double> targets) {
  std::vector<ErtPoint> out;
  for (double t : targets) {
    RunConfig c = config;
    c.f_target = t;
    std::vector<RunResult> results;
    for (const auto& tr : traces) results.push_back(make_result(tr, c));
    out.push_back({t, ert(results)});
  }
  return out;
}

/// Evenly spaced targets from `low` to `high` inclusive.
inline std::vector<double> target_grid(double low, double high, std::size_t count) {
  std::vector<double> t;
  if (count == 1) return {high};
  for (std::size_t k = 0; k < count; ++k) t.push_back(low + (high - low) * static_cast<double>(k) / (count - 1.0));
  return t;
}

/// Plot column stride for a given T_max.
inline std::size_t plot_stride(std::size_t T_max) { return std::max<std::size_t>(1, T_max / 2000); }

// ---------------------------------------------------------------------------
// CSV

inline std::string convergence_csv(const ConvergenceMatrix& m, const std::vector<EvalTrace>& traces,
                                   const char* value_column = "best_h") {
  std::string out = std::string("run,eval,") + value_column + "\n";
  for (std::size_t i = 0; i < m.rows; ++i) {
    const std::string run = std::to_string(traces[i].run_index);
    for (std::size_t j = 0; j < m.cols; ++j) out += run + "," + std::to_string(j + 1) + "," + format_double(m(i, j)) + "\n";
  }
  return out;
}

inline std::string summary_csv(const std::vector<ColumnSummary>& s) {
  std::string out = "eval,mean,min,q1,median,q3,max\n";
  for (std::size_t j = 0; j < s.size(); ++j) {
    const auto& c = s[j];
    out += std::to_string(j + 1) + "," + format_double(c.mean) + "," + format_double(c.min) + "," +
           format_double(c.q1) + "," + format_double(c.median) + "," + format_double(c.q3) + "," +
           format_double(c.max) + "\n";
  }
  return out;
}

inline std::string band_label(const ScoreSchedule& bands, std::size_t b) {
  return b < bands.size() ? bands[b].label : std::string("outside");
}

inline std::string bands_csv(const std::vector<std::vector<std::size_t>>& counts, const ScoreSchedule& bands) {
  std::string out = "eval,band,count\n";
  for (std::size_t j = 0; j < counts.size(); ++j) {
    for (std::size_t b = 0; b < counts[j].size(); ++b) {
      if (b == bands.size() && counts[j][b] == 0) continue;
      out += std::to_string(j + 1) + "," + band_label(bands, b) + "," + std::to_string(counts[j][b]) + "\n";
    }
  }
  return out;
}

inline std::string ert_curve_csv(const std::vector<ErtPoint>& curve) {
  std::string out = "target,ert\n";
  for (const auto& p : curve) out += format_double(p.target) + "," + format_double(p.ert) + "\n";
  return out;
}

// ---------------------------------------------------------------------------
// SVG

namespace detail {

inline std::vector<double> plot_columns(std::size_t cols) {
  std::vector<double> x;
  const std::size_t stride = plot_stride(cols);
  for (std::size_t j = 0; j < cols; j += stride) x.push_back(static_cast<double>(j + 1));
  if (x.empty() || x.back() != static_cast<double>(cols)) x.push_back(static_cast<double>(cols));
  return x;
}

inline std::size_t column_of(double x) { return static_cast<std::size_t>(x) - 1; }

}  // namespace detail

inline std::string summary_svg(const std::vector<ColumnSummary>& s, const std::string& title,
                               const std::string& y_label) {
  svg::Axes axes;
  axes.title = title;
  axes.x_label = "function evaluations";
  axes.y_label = y_label;
  axes.x = detail::plot_columns(s.size());
  axes.y_min = std::numeric_limits<double>::infinity();
  axes.y_max = -std::numeric_limits<double>::infinity();
  for (const auto& c : s) {
    axes.y_min = std::min(axes.y_min, c.min);
    axes.y_max = std::max(axes.y_max, c.max);
  }
  std::vector<svg::Series> series(6);
  series[0] = {"max", "#1f4e79", {}, true};
  series[1] = {"q3", "#2e75b6", {}, false};
  series[2] = {"median", "#000000", {}, false};
  series[3] = {"q1", "#2e75b6", {}, false};
  series[4] = {"min", "#1f4e79", {}, true};
  series[5] = {"mean", "#c00000", {}, false};
  for (double x : axes.x) {
    const auto& c = s[detail::column_of(x)];
    series[0].y.push_back(c.max);
    series[1].y.push_back(c.q3);
    series[2].y.push_back(c.median);
    series[3].y.push_back(c.q1);
    series[4].y.push_back(c.min);
    series[5].y.push_back(c.mean);
  }
  return svg::line_chart(axes, series);
}

inline std::string bands_svg(const std::vector<std::vector<std::size_t>>& counts, const ScoreSchedule& bands,
                             std::size_t runs) {
  svg::Axes axes;
  axes.title = "Height bands of best-so-far heights";
  axes.x_label = "function evaluations";
  axes.y_label = "runs";
  axes.x = detail::plot_columns(counts.size());
  axes.y_min = 0.0;
  axes.y_max = static_cast<double>(runs);
  std::vector<svg::Layer> layers;
  for (std::size_t b = 0; b <= bands.size(); ++b) {
    svg::Layer layer{band_label(bands, b), b < bands.size() ? band_colour_hex(bands[b].colour) : "#cccccc", {}};
    bool any = false;
    for (double x : axes.x) {
      const std::size_t c = counts[detail::column_of(x)][b];
      any = any || c > 0;
      layer.y.push_back(static_cast<double>(c));
    }
    if (b < bands.size() || any) layers.push_back(std::move(layer));
  }
  return svg::stacked_area_chart(axes, layers);
}

inline std::string ert_curve_svg(const std::vector<ErtPoint>& curve) {
  svg::Axes axes;
  axes.title = "ERT against target height";
  axes.x_label = "target height (m)";
  axes.y_label = "ERT (function evaluations)";
  svg::Series s{"ERT", "#c00000", {}, false};
  axes.y_min = 0.0;
  axes.y_max = 1.0;
  for (const auto& p : curve) {
    axes.x.push_back(p.target);
    s.y.push_back(p.ert);
    if (std::isfinite(p.ert)) axes.y_max = std::max(axes.y_max, p.ert);
  }
  return svg::line_chart(axes, {s});
}

}  // namespace terrabench
