#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "terrabench/objective.hpp"
#include "terrabench/rng.hpp"

namespace terrabench {

struct PsoParams {
  /// Standard deviation (meters) of the initial particle cloud around the start.
  double sigma0 = 1.2e5;
  /// Balance between personal and global attraction: 0 uses personal bests
  /// only, 1 uses the global best only.
  double r = 0.5;
  int population_size = 6;
  /// Iterations without an f_tol improvement of the global best before stopping.
  std::size_t stall_window = 20;
  /// 0 means no limit.
  std::size_t max_iterations = 0;

  void validate() const {
    if (!(sigma0 > 0.0)) throw ConfigError("pso: sigma0 must be > 0");
    if (!(r >= 0.0 && r <= 1.0)) throw ConfigError("pso: r must lie in [0, 1]");
    if (population_size < 1) throw ConfigError("pso: population_size must be >= 1");
    if (stall_window < 1) throw ConfigError("pso: stall_window must be >= 1");
  }
};

struct PsoCoefficients {
  double personal;  // upper bound of the per-coordinate personal weight
  double global;    // upper bound of the per-coordinate global weight
  double chi;       // constriction factor
};

/// Clerc-Kennedy constriction with total acceleration 4.1.
inline PsoCoefficients pso_coefficients(double r) {
  constexpr double kAmax = 4.1;
  const double chi = 2.0 / std::abs(2.0 - kAmax - std::sqrt(kAmax * kAmax - 4.0 * kAmax));
  return {kAmax * (1.0 - r), kAmax * r, chi};
}

/// Particle swarm maximising the height.
///
/// Particle 0 starts at `start`, the others are drawn from N(start, sigma0^2)
/// and clipped. Velocities start at 0.1 * sigma0 * U(0, 1). Each iteration
/// evaluates every particle, updates personal and global bests, then moves
/// each particle with v <- chi * (v + U(0, a_p) (p_i - x) + U(0, a_g) (g - x)).
inline OptimizeResult pso(Objective& objective, const Bounds& bounds, std::span<const double> start,
                          const PsoParams& params, const LocalTolerances& tolerances, std::uint64_t seed) {
  params.validate();
  tolerances.validate();
  bounds.validate();
  const std::size_t dim = bounds.dim();
  if (start.size() != dim) throw ConfigError("start point dimension does not match bounds");
  const auto np = static_cast<std::size_t>(params.population_size);
  const PsoCoefficients coef = pso_coefficients(params.r);

  Rng rng(seed);
  detail::Evaluator eval(objective, bounds);

  std::vector<std::vector<double>> xs(np, std::vector<double>(start.begin(), start.end()));
  std::vector<std::vector<double>> vs(np, std::vector<double>(dim));
  for (std::size_t i = 1; i < np; ++i) {
    for (std::size_t k = 0; k < dim; ++k) xs[i][k] = start[k] + params.sigma0 * rng.normal();
  }
  for (auto& x : xs) bounds.clip(x);
  for (auto& v : vs) {
    for (double& c : v) c = 0.1 * params.sigma0 * rng.uniform();
  }

  std::vector<std::vector<double>> personal = xs;
  std::vector<double> personal_h(np, -std::numeric_limits<double>::infinity());
  std::vector<double> global = xs[0];
  double global_h = -std::numeric_limits<double>::infinity();
  double stall_reference = global_h;
  std::size_t stall = 0;

  for (std::size_t iter = 0; params.max_iterations == 0 || iter < params.max_iterations; ++iter) {
    std::vector<double> h(np);
    for (std::size_t i = 0; i < np; ++i) {
      h[i] = eval(xs[i]);
      if (eval.stop()) return eval.result(StopReason::external);
    }
    for (std::size_t i = 0; i < np; ++i) {
      if (h[i] > personal_h[i]) {
        personal_h[i] = h[i];
        personal[i] = xs[i];
      }
      if (h[i] > global_h) {
        global_h = h[i];
        global = xs[i];
      }
    }
    for (std::size_t i = 0; i < np; ++i) {
      for (std::size_t k = 0; k < dim; ++k) {
        const double wp = rng.uniform(0.0, coef.personal);
        const double wg = rng.uniform(0.0, coef.global);
        vs[i][k] = coef.chi * (vs[i][k] + wp * (personal[i][k] - xs[i][k]) + wg * (global[k] - xs[i][k]));
        xs[i][k] += vs[i][k];
      }
    }

    if (global_h - stall_reference >= tolerances.f_tol) {
      stall_reference = global_h;
      stall = 0;
    } else if (++stall >= params.stall_window) {
      return eval.result(StopReason::stalled);
    }
  }
  return eval.result(StopReason::max_iterations);
}

}  // namespace terrabench
