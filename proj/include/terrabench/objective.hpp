#pragma once

#include <algorithm>
#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <utility>
#include <vector>

#include "terrabench/errors.hpp"
#include "terrabench/grid.hpp"

namespace terrabench {

/// A height function to maximise, plus an external stop signal.
///
/// Optimizers poll stop_requested() after every evaluation and return as soon
/// as it is set; the benchmark harness uses it for the global termination
/// criteria (target reached, evaluation budget spent).
class Objective {
 public:
  virtual ~Objective() = default;
  virtual double evaluate(std::span<const double> x) = 0;
  virtual bool stop_requested() const { return false; }
};

/// Adapts any callable `double(std::span<const double>)`.
template <class F>
class FunctionObjective final : public Objective {
 public:
  explicit FunctionObjective(F f) : f_(std::move(f)) {}
  double evaluate(std::span<const double> x) override { return f_(x); }

 private:
  F f_;
};

template <class F>
FunctionObjective(F) -> FunctionObjective<F>;

/// Axis-aligned box.
struct Bounds {
  std::vector<double> lower;
  std::vector<double> upper;

  static Bounds rect(const DomainRect& d) { return {{0.0, 0.0}, {d.width, d.height}}; }

  std::size_t dim() const noexcept { return lower.size(); }
  double range(std::size_t i) const noexcept { return upper[i] - lower[i]; }

  void clip(std::span<double> x) const noexcept {
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::clamp(x[i], lower[i], upper[i]);
  }

  bool contains(std::span<const double> x) const noexcept {
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (x[i] < lower[i] || x[i] > upper[i]) return false;
    }
    return true;
  }

  void validate() const {
    if (lower.empty() || lower.size() != upper.size()) throw ConfigError("bounds dimension mismatch");
    for (std::size_t i = 0; i < lower.size(); ++i) {
      if (!(lower[i] < upper[i])) throw ConfigError("bounds must satisfy lower < upper");
    }
  }
};

/// Local termination tolerances in objective units (f_tol) and domain units (x_tol).
struct LocalTolerances {
  double f_tol = 0.2;
  double x_tol = 10.0;

  void validate() const {
    if (!(f_tol > 0.0)) throw ConfigError("f_tol must be > 0");
    if (!(x_tol > 0.0)) throw ConfigError("x_tol must be > 0");
  }
};

enum class StopReason { f_tol, x_tol, stalled, max_iterations, external, converged };

struct OptimizeResult {
  std::vector<double> x;
  double height = -std::numeric_limits<double>::infinity();
  std::size_t evaluations = 0;
  StopReason reason = StopReason::converged;
};

namespace detail {

/// Clips proposals to the bounds, evaluates and tracks the best point seen.
class Evaluator {
 public:
  Evaluator(Objective& objective, const Bounds& bounds) : objective_(objective), bounds_(bounds) {}

  /// Clips x in place and returns its height.
  double operator()(std::vector<double>& x) {
    bounds_.clip(x);
    const double h = objective_.evaluate(x);
    ++count_;
    if (best_x_.empty() || h > best_h_) {
      best_h_ = h;
      best_x_ = x;
    }
    return h;
  }

  bool stop() const { return objective_.stop_requested(); }
  std::size_t count() const noexcept { return count_; }
  const Bounds& bounds() const noexcept { return bounds_; }

  OptimizeResult result(StopReason reason) const {
    return {best_x_, best_h_, count_, stop() ? StopReason::external : reason};
  }

 private:
  Objective& objective_;
  const Bounds& bounds_;
  std::size_t count_ = 0;
  double best_h_ = -std::numeric_limits<double>::infinity();
  std::vector<double> best_x_;
};

/// Exposes an Evaluator as an Objective so a nested local search shares its
/// clipping, counting and best-point tracking.
class EvaluatorObjective final : public Objective {
 public:
  explicit EvaluatorObjective(Evaluator& eval) : eval_(eval) {}
  double evaluate(std::span<const double> x) override {
    std::vector<double> v(x.begin(), x.end());
    return eval_(v);
  }
  bool stop_requested() const override { return eval_.stop(); }

 private:
  Evaluator& eval_;
};

}  // namespace detail

}  // namespace terrabench
