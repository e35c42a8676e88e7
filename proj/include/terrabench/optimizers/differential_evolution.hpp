#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <span>
#include <vector>

#include "terrabench/objective.hpp"
#include "terrabench/optimizers/nelder_mead.hpp"
#include "terrabench/rng.hpp"

namespace terrabench {

struct DifferentialEvolutionParams {
  /// Population multiplier: the population holds popsize * dim members.
  int popsize = 15;
  double recombination = 0.7;
  bool polish = false;
  bool dithering = true;
  double mutation_low = 0.5;
  double mutation_high = 1.0;
  std::size_t max_generations = 1000;

  void validate() const {
    if (popsize < 1) throw ConfigError("differential_evolution: popsize must be >= 1");
    if (!(recombination >= 0.0 && recombination <= 1.0)) {
      throw ConfigError("differential_evolution: recombination must lie in [0, 1]");
    }
    if (!(mutation_low >= 0.0 && mutation_low <= 2.0)) {
      throw ConfigError("differential_evolution: mutation_low must lie in [0, 2]");
    }
    if (dithering && !(mutation_high >= mutation_low && mutation_high <= 2.0)) {
      throw ConfigError("differential_evolution: mutation_high must lie in [mutation_low, 2]");
    }
  }

  /// Mutation factor of a generation: U(low, high) with dithering, else low.
  double mutation_factor(Rng& rng) const {
    return dithering ? rng.uniform(mutation_low, mutation_high) : mutation_low;
  }
};

struct DifferentialEvolutionHooks {
  /// Called once per generation with the mutation factor used.
  std::function<void(std::size_t generation, double mutation)> on_generation;
};

/// DE/rand/1/bin maximising the height.
///
/// The population is initialised by Latin hypercube sampling with the start
/// point as member 0. Trial vectors replace their target immediately when at
/// least as high. The search converges when the standard deviation of the
/// population heights drops below f_tol; with `polish`, Nelder-Mead then runs
/// from the best member.
inline OptimizeResult differential_evolution(Objective& objective, const Bounds& bounds,
                                             std::span<const double> start, const DifferentialEvolutionParams& params,
                                             const LocalTolerances& tolerances, std::uint64_t seed,
                                             const DifferentialEvolutionHooks& hooks = {}) {
  params.validate();
  tolerances.validate();
  bounds.validate();
  const std::size_t dim = bounds.dim();
  const std::size_t np = static_cast<std::size_t>(params.popsize) * dim;
  if (np < 4) throw ConfigError("differential_evolution: population (popsize * dim) must be >= 4");

  Rng rng(seed);
  detail::Evaluator eval(objective, bounds);

  // Latin hypercube: each coordinate is stratified into np segments.
  std::vector<std::vector<double>> pop(np, std::vector<double>(dim));
  for (std::size_t k = 0; k < dim; ++k) {
    std::vector<std::size_t> perm(np);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    for (std::size_t i = np - 1; i > 0; --i) std::swap(perm[i], perm[rng.below(i + 1)]);
    for (std::size_t i = 0; i < np; ++i) {
      const double u = (static_cast<double>(perm[i]) + rng.uniform()) / static_cast<double>(np);
      pop[i][k] = bounds.lower[k] + u * bounds.range(k);
    }
  }
  if (!start.empty()) pop[0].assign(start.begin(), start.end());

  std::vector<double> fit(np);
  for (std::size_t i = 0; i < np; ++i) {
    fit[i] = eval(pop[i]);
    if (eval.stop()) return eval.result(StopReason::external);
  }

  auto converged = [&] {
    const double mean = std::accumulate(fit.begin(), fit.end(), 0.0) / static_cast<double>(np);
    double ss = 0.0;
    for (double f : fit) ss += (f - mean) * (f - mean);
    return std::sqrt(ss / static_cast<double>(np)) < tolerances.f_tol;
  };

  StopReason reason = StopReason::max_iterations;
  std::vector<double> trial(dim);
  for (std::size_t gen = 0; gen < params.max_generations; ++gen) {
    if (converged()) {
      reason = StopReason::f_tol;
      break;
    }
    const double mutation = params.mutation_factor(rng);
    if (hooks.on_generation) hooks.on_generation(gen, mutation);
    for (std::size_t i = 0; i < np; ++i) {
      std::size_t r[3];
      for (std::size_t k = 0; k < 3; ++k) {
        do {
          r[k] = rng.below(np);
        } while (r[k] == i || (k > 0 && r[k] == r[0]) || (k > 1 && r[k] == r[1]));
      }
      const std::size_t forced = rng.below(dim);
      for (std::size_t k = 0; k < dim; ++k) {
        const bool cross = k == forced || rng.uniform() < params.recombination;
        trial[k] = cross ? pop[r[0]][k] + mutation * (pop[r[1]][k] - pop[r[2]][k]) : pop[i][k];
      }
      const double f = eval(trial);
      if (eval.stop()) return eval.result(StopReason::external);
      if (f >= fit[i]) {
        pop[i] = trial;
        fit[i] = f;
      }
    }
  }
  if (reason == StopReason::max_iterations && converged()) reason = StopReason::f_tol;

  if (params.polish) {
    const auto best = static_cast<std::size_t>(std::max_element(fit.begin(), fit.end()) - fit.begin());
    NelderMeadOptions nm;
    nm.tolerances = tolerances;
    nm.initial_step.resize(dim);
    // Start the simplex at the population's spread around the best member.
    for (std::size_t k = 0; k < dim; ++k) {
      double lo = pop[0][k];
      double hi = pop[0][k];
      for (const auto& m : pop) {
        lo = std::min(lo, m[k]);
        hi = std::max(hi, m[k]);
      }
      nm.initial_step[k] = std::max(hi - lo, 2.0 * tolerances.x_tol);
    }
    detail::EvaluatorObjective polish_objective(eval);
    nelder_mead(polish_objective, bounds, pop[best], nm);
  }
  return eval.result(reason);
}

}  // namespace terrabench
