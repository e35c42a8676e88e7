#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "terrabench/objective.hpp"

namespace terrabench {

struct NelderMeadOptions {
  LocalTolerances tolerances;
  /// Per-coordinate initial simplex step. Empty: a quarter of the bound range,
  /// shortened near a bound so the first vertices stay inside.
  std::vector<double> initial_step;
  /// 0 means no iteration limit.
  std::size_t max_iterations = 0;
  /// Simplex rebuilds allowed after collapsing onto a lower-dimensional face.
  std::size_t max_restarts = 8;
};

namespace detail {

inline std::vector<double> default_initial_step(const Bounds& bounds, std::span<const double> x) {
  std::vector<double> step(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    double s = 0.25 * bounds.range(i);
    if (bounds.upper[i] - x[i] < s && bounds.upper[i] > x[i]) s = 0.75 * (bounds.upper[i] - x[i]);
    if (x[i] - bounds.lower[i] < s && x[i] > bounds.lower[i]) s = 0.75 * (x[i] - bounds.lower[i]);
    step[i] = s;
  }
  return step;
}

}  // namespace detail

/// Nelder-Mead simplex search for the maximum height.
///
/// Standard coefficients (reflection 1, expansion 2, contraction 1/2, shrink 1/2).
/// Stops when EITHER every vertex is within f_tol of the best value OR every
/// vertex is within x_tol of the best vertex in each coordinate. A simplex that
/// collapses onto a face (which clipping at the bounds can cause) is rebuilt
/// around the best vertex.
inline OptimizeResult nelder_mead(Objective& objective, const Bounds& bounds, std::span<const double> start,
                                  const NelderMeadOptions& options = {}) {
  bounds.validate();
  options.tolerances.validate();
  const std::size_t n = bounds.dim();
  if (start.size() != n) throw ConfigError("start point dimension does not match bounds");

  detail::Evaluator eval(objective, bounds);
  // Values are stored negated: the simplex minimises -height.
  std::vector<std::vector<double>> simplex(n + 1);
  std::vector<double> value(n + 1);

  auto build = [&](std::span<const double> base, std::span<const double> step, bool reuse_base, double base_value) {
    simplex[0].assign(base.begin(), base.end());
    value[0] = reuse_base ? base_value : -eval(simplex[0]);
    for (std::size_t i = 0; i < n && !eval.stop(); ++i) {
      auto v = simplex[0];
      double s = step[i];
      if (v[i] + s > bounds.upper[i]) s = -s;
      v[i] += s;
      value[i + 1] = -eval(v);
      simplex[i + 1] = std::move(v);
    }
    return !eval.stop();
  };

  {
    std::vector<double> x0(start.begin(), start.end());
    bounds.clip(x0);
    const auto step = options.initial_step.empty() ? detail::default_initial_step(bounds, x0) : options.initial_step;
    if (step.size() != n) throw ConfigError("initial_step dimension does not match bounds");
    if (!build(x0, step, false, 0.0)) return eval.result(StopReason::external);
  }

  std::vector<std::size_t> order(n + 1);
  auto sort_simplex = [&] {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return value[a] < value[b]; });
    std::vector<std::vector<double>> s(n + 1);
    std::vector<double> v(n + 1);
    for (std::size_t i = 0; i <= n; ++i) {
      s[i] = std::move(simplex[order[i]]);
      v[i] = value[order[i]];
    }
    simplex = std::move(s);
    value = std::move(v);
  };

  auto f_converged = [&] {
    for (std::size_t i = 1; i <= n; ++i) {
      if (std::abs(value[i] - value[0]) >= options.tolerances.f_tol) return false;
    }
    return true;
  };
  auto x_converged = [&] {
    for (std::size_t i = 1; i <= n; ++i) {
      for (std::size_t k = 0; k < n; ++k) {
        if (std::abs(simplex[i][k] - simplex[0][k]) >= options.tolerances.x_tol) return false;
      }
    }
    return true;
  };
  auto degenerate = [&] {
    Eigen::MatrixXd edges(n, n);
    double scale = 0.0;
    for (std::size_t i = 1; i <= n; ++i) {
      for (std::size_t k = 0; k < n; ++k) {
        edges(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(i - 1)) = simplex[i][k] - simplex[0][k];
        scale = std::max(scale, std::abs(simplex[i][k] - simplex[0][k]));
      }
    }
    if (scale == 0.0) return true;
    return std::abs((edges / scale).determinant()) < 1e-10;
  };

  std::size_t restarts = 0;
  std::size_t iteration = 0;
  std::vector<double> centroid(n);
  auto affine = [&](const std::vector<double>& from, const std::vector<double>& to, double t) {
    std::vector<double> x(n);
    for (std::size_t k = 0; k < n; ++k) x[k] = from[k] + t * (to[k] - from[k]);
    return x;
  };

  while (true) {
    sort_simplex();
    if (f_converged()) return eval.result(StopReason::f_tol);
    if (x_converged()) return eval.result(StopReason::x_tol);
    if (options.max_iterations != 0 && iteration >= options.max_iterations) {
      return eval.result(StopReason::max_iterations);
    }
    if (degenerate()) {
      if (restarts >= options.max_restarts) return eval.result(StopReason::converged);
      ++restarts;
      std::vector<double> step(n, 0.0);
      for (std::size_t i = 1; i <= n; ++i) {
        for (std::size_t k = 0; k < n; ++k) step[k] = std::max(step[k], std::abs(simplex[i][k] - simplex[0][k]));
      }
      for (std::size_t k = 0; k < n; ++k) step[k] = std::max(step[k], 2.0 * options.tolerances.x_tol);
      const auto base = simplex[0];
      if (!build(base, step, true, value[0])) return eval.result(StopReason::external);
      continue;
    }
    ++iteration;

    std::fill(centroid.begin(), centroid.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t k = 0; k < n; ++k) centroid[k] += simplex[i][k] / static_cast<double>(n);
    }
    const auto& worst = simplex[n];

    auto xr = affine(centroid, worst, -1.0);
    const double fr = -eval(xr);
    if (eval.stop()) return eval.result(StopReason::external);

    if (fr < value[0]) {
      auto xe = affine(centroid, worst, -2.0);
      const double fe = -eval(xe);
      if (eval.stop()) return eval.result(StopReason::external);
      if (fe < fr) {
        simplex[n] = std::move(xe);
        value[n] = fe;
      } else {
        simplex[n] = std::move(xr);
        value[n] = fr;
      }
      continue;
    }
    if (fr < value[n - 1]) {
      simplex[n] = std::move(xr);
      value[n] = fr;
      continue;
    }

    bool accepted = false;
    if (fr < value[n]) {
      auto xc = affine(centroid, xr, 0.5);
      const double fc = -eval(xc);
      if (eval.stop()) return eval.result(StopReason::external);
      if (fc <= fr) {
        simplex[n] = std::move(xc);
        value[n] = fc;
        accepted = true;
      }
    } else {
      auto xc = affine(centroid, worst, 0.5);
      const double fc = -eval(xc);
      if (eval.stop()) return eval.result(StopReason::external);
      if (fc < value[n]) {
        simplex[n] = std::move(xc);
        value[n] = fc;
        accepted = true;
      }
    }
    if (accepted) continue;

    for (std::size_t i = 1; i <= n; ++i) {
      simplex[i] = affine(simplex[0], simplex[i], 0.5);
      value[i] = -eval(simplex[i]);
      if (eval.stop()) return eval.result(StopReason::external);
    }
  }
}

}  // namespace terrabench
