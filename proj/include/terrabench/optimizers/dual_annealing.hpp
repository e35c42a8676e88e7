#pragma once

// Dual annealing: generalized simulated annealing (Tsallis-Stariolo visiting
// distribution, generalized Metropolis acceptance) with Nelder-Mead local
// phases. The control flow follows the widely used SciPy formulation:
// a strategy chain of 2n visits per iteration, local search after an
// improvement or a long stall, and re-annealing from a random point once the
// temperature drops below initial_temp * restart_temp_ratio.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <span>
#include <vector>

#include "terrabench/objective.hpp"
#include "terrabench/optimizers/nelder_mead.hpp"
#include "terrabench/rng.hpp"

namespace terrabench {

struct DualAnnealingParams {
  double initial_temp = 5230.0;
  double restart_temp_ratio = 2e-5;
  /// Visiting distribution parameter q_v.
  double visit = 2.62;
  /// Acceptance distribution parameter q_a.
  double accept = -5.0;
  std::size_t max_iterations = 1000;
  bool local_search = true;

  void validate() const {
    if (!(initial_temp > 0.0)) throw ConfigError("dual_annealing: initial_temp must be > 0");
    if (!(restart_temp_ratio > 0.0 && restart_temp_ratio < 1.0)) {
      throw ConfigError("dual_annealing: restart_temp_ratio must lie in (0, 1)");
    }
    if (!(visit > 1.0 && visit < 3.0)) throw ConfigError("dual_annealing: visit must lie in (1, 3)");
    if (!(accept < 0.0)) throw ConfigError("dual_annealing: accept must be < 0");
  }
};

struct DualAnnealingHooks {
  /// Called at the start of every annealing iteration. `restart` counts
  /// re-annealing cycles; within a cycle temperatures strictly decrease.
  std::function<void(std::size_t iteration, std::size_t restart, double temperature)> on_iteration;
};

namespace detail {

class VisitingDistribution {
 public:
  static constexpr double kTailLimit = 1e8;
  static constexpr double kMinVisitBound = 1e-10;

  VisitingDistribution(const Bounds& bounds, double visit, Rng& rng) : bounds_(bounds), qv_(visit), rng_(rng) {
    const double pi = std::numbers::pi;
    factor2_ = std::exp((4.0 - qv_) * std::log(qv_ - 1.0));
    factor3_ = std::exp((2.0 - qv_) * std::log(2.0) / (qv_ - 1.0));
    factor4_p_ = std::sqrt(pi) * factor2_ / (factor3_ * (3.0 - qv_));
    factor5_ = 1.0 / (qv_ - 1.0) - 0.5;
    d1_ = 2.0 - factor5_;
    factor6_ = pi * (1.0 - factor5_) / std::sin(pi * (1.0 - factor5_)) / std::exp(std::lgamma(d1_));
  }

  /// Steps 0..n-1 move all coordinates; step n + k moves coordinate k only.
  std::vector<double> visiting(const std::vector<double>& x, std::size_t step, double temperature) {
    const std::size_t dim = x.size();
    std::vector<double> out = x;
    if (step < dim) {
      auto visits = visit_fn(temperature, dim);
      const double upper_sample = rng_.uniform();
      const double lower_sample = rng_.uniform();
      for (std::size_t i = 0; i < dim; ++i) {
        if (visits[i] > kTailLimit) {
          visits[i] = kTailLimit * upper_sample;
        } else if (visits[i] < -kTailLimit) {
          visits[i] = -kTailLimit * lower_sample;
        }
        out[i] = wrap(i, x[i] + visits[i]);
      }
    } else {
      double visit = visit_fn(temperature, 1)[0];
      if (visit > kTailLimit) {
        visit = kTailLimit * rng_.uniform();
      } else if (visit < -kTailLimit) {
        visit = -kTailLimit * rng_.uniform();
      }
      const std::size_t i = step - dim;
      out[i] = wrap(i, x[i] + visit);
    }
    return out;
  }

 private:
  std::vector<double> visit_fn(double temperature, std::size_t dim) {
    std::vector<double> x(dim);
    std::vector<double> y(dim);
    for (std::size_t i = 0; i < dim; ++i) {
      x[i] = rng_.normal();
      y[i] = rng_.normal();
    }
    const double factor1 = std::exp(std::log(temperature) / (qv_ - 1.0));
    const double factor4 = factor4_p_ * factor1;
    const double sigmax = std::exp(-(qv_ - 1.0) * std::log(factor6_ / factor4) / (3.0 - qv_));
    for (std::size_t i = 0; i < dim; ++i) {
      const double den = std::exp((qv_ - 1.0) * std::log(std::abs(y[i])) / (3.0 - qv_));
      x[i] = x[i] * sigmax / den;
    }
    return x;
  }

  // Periodic wrap into [lower, upper).
  double wrap(std::size_t i, double v) const {
    const double range = bounds_.range(i);
    const double a = v - bounds_.lower[i];
    double out = std::fmod(std::fmod(a, range) + range, range) + bounds_.lower[i];
    if (std::abs(out - bounds_.lower[i]) < kMinVisitBound) out += kMinVisitBound;
    return out;
  }

  const Bounds& bounds_;
  double qv_;
  Rng& rng_;
  double factor2_, factor3_, factor4_p_, factor5_, d1_, factor6_;
};

}  // namespace detail

/// Dual annealing maximising the height (energy = -height).
inline OptimizeResult dual_annealing(Objective& objective, const Bounds& bounds, std::span<const double> start,
                                     const DualAnnealingParams& params, const LocalTolerances& tolerances,
                                     std::uint64_t seed, const DualAnnealingHooks& hooks = {}) {
  params.validate();
  tolerances.validate();
  bounds.validate();
  const std::size_t dim = bounds.dim();
  if (start.size() != dim) throw ConfigError("start point dimension does not match bounds");

  Rng rng(seed);
  detail::Evaluator eval(objective, bounds);
  detail::EvaluatorObjective nested(eval);
  detail::VisitingDistribution visiting(bounds, params.visit, rng);

  std::vector<double> current(start.begin(), start.end());
  double current_e = -eval(current);
  if (eval.stop()) return eval.result(StopReason::external);
  std::vector<double> best = current;
  double best_e = current_e;

  NelderMeadOptions ls_options;
  ls_options.tolerances = tolerances;
  ls_options.max_iterations = std::min<std::size_t>(std::max<std::size_t>(100, 6 * dim), 1000);
  // Local search from x; returns an improvement over `energy` or (energy, x) unchanged.
  auto local_search = [&](const std::vector<double>& x, double energy) -> std::pair<double, std::vector<double>> {
    const auto r = nelder_mead(nested, bounds, x, ls_options);
    if (!r.x.empty() && -r.height < energy) return {-r.height, r.x};
    return {energy, x};
  };

  // Strategy chain state.
  std::vector<double> xmin = current;
  double emin = current_e;
  std::size_t not_improved = 0;
  std::size_t not_improved_max = 1000;
  bool improved = false;

  const double qa = params.accept;
  const double t_restart = params.initial_temp * params.restart_temp_ratio;
  const double t1 = std::exp((params.visit - 1.0) * std::log(2.0)) - 1.0;
  std::size_t iteration = 0;
  std::size_t restart = 0;

  while (true) {
    for (std::size_t i = 0;; ++i) {
      if (iteration >= params.max_iterations) return eval.result(StopReason::max_iterations);
      const double s = static_cast<double>(i) + 2.0;
      const double t2 = std::exp((params.visit - 1.0) * std::log(s)) - 1.0;
      const double temperature = params.initial_temp * t1 / t2;
      if (temperature < t_restart) {
        for (std::size_t k = 0; k < dim; ++k) current[k] = bounds.lower[k] + bounds.range(k) * rng.uniform();
        current_e = -eval(current);
        if (eval.stop()) return eval.result(StopReason::external);
        if (current_e < best_e) {
          best_e = current_e;
          best = current;
        }
        ++restart;
        break;
      }
      if (hooks.on_iteration) hooks.on_iteration(iteration, restart, temperature);

      // Strategy chain.
      const double temperature_step = temperature / static_cast<double>(i + 1);
      ++not_improved;
      for (std::size_t j = 0; j < 2 * dim; ++j) {
        if (j == 0) {
          improved = i == 0;
          if (i == 0) not_improved = 0;
        }
        auto x_visit = visiting.visiting(current, j, temperature);
        const double e = -eval(x_visit);
        if (eval.stop()) return eval.result(StopReason::external);
        if (e < current_e) {
          current_e = e;
          current = x_visit;
          if (e < best_e) {
            best_e = e;
            best = x_visit;
            improved = true;
            not_improved = 0;
          }
        } else {
          const double r = rng.uniform();
          const double pqv_temp = 1.0 - (1.0 - qa) * (e - current_e) / temperature_step;
          const double pqv = pqv_temp > 0.0 ? std::exp(std::log(pqv_temp) / (1.0 - qa)) : 0.0;
          if (r <= pqv) {
            current_e = e;
            current = x_visit;
            xmin = current;
          }
          if (not_improved >= not_improved_max && (j == 0 || current_e < emin)) {
            emin = current_e;
            xmin = current;
          }
        }
      }

      // Local search.
      if (params.local_search) {
        if (improved) {
          auto [e, x] = local_search(best, best_e);
          if (eval.stop()) return eval.result(StopReason::external);
          if (e < best_e) {
            not_improved = 0;
            best_e = e;
            best = x;
            current_e = e;
            current = x;
          }
        }
        if (not_improved >= not_improved_max) {
          auto [e, x] = local_search(xmin, emin);
          if (eval.stop()) return eval.result(StopReason::external);
          xmin = x;
          emin = e;
          not_improved = 0;
          not_improved_max = dim;
          if (e < best_e) {
            best_e = e;
            best = x;
            current_e = e;
            current = x;
          }
        }
      }
      ++iteration;
    }
  }
}

}  // namespace terrabench
