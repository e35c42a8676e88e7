#pragma once

#include <cstdint>
#include <functional>
#include <span>

#include "terrabench/hyperparameters.hpp"
#include "terrabench/objective.hpp"
#include "terrabench/optimizers/cma_es.hpp"
#include "terrabench/optimizers/differential_evolution.hpp"
#include "terrabench/optimizers/dual_annealing.hpp"
#include "terrabench/optimizers/nelder_mead.hpp"
#include "terrabench/optimizers/pso.hpp"

namespace terrabench {

/// One launch of an optimizer from a start point. Any callable with this
/// signature can be benchmarked, so external optimizers plug in here.
using Launcher = std::function<OptimizeResult(Objective&, const Bounds&, std::span<const double> start,
                                              const LocalTolerances&, std::uint64_t seed)>;

inline DifferentialEvolutionParams de_params(const OptimizerInstance& inst) {
  DifferentialEvolutionParams p;
  p.popsize = static_cast<int>(inst.get("popsize"));
  p.recombination = inst.get("recombination");
  p.polish = inst.get("polish") != 0.0;
  p.dithering = inst.get("dithering") != 0.0;
  p.mutation_low = inst.get("mutation_low");
  p.mutation_high = inst.get("mutation_high");
  return p;
}

inline PsoParams pso_params(const OptimizerInstance& inst) {
  PsoParams p;
  p.sigma0 = inst.get("sigma0");
  p.r = inst.get("r");
  p.population_size = static_cast<int>(inst.get("population_size"));
  return p;
}

inline CmaEsParams cma_es_params(const OptimizerInstance& inst) {
  CmaEsParams p;
  p.sigma0 = inst.get("sigma0");
  p.population_size = static_cast<int>(inst.get("population_size"));
  return p;
}

inline DualAnnealingParams dual_annealing_params(const OptimizerInstance& inst) {
  DualAnnealingParams p;
  p.initial_temp = inst.get("initial_temp");
  p.restart_temp_ratio = inst.get("restart_temp_ratio");
  p.visit = inst.get("visit");
  p.accept = inst.get("accept");
  return p;
}

/// Launcher for a built-in instance. Parameters are converted and validated once.
inline Launcher make_launcher(const OptimizerInstance& inst) {
  switch (inst.algorithm) {
    case Algorithm::nelder_mead:
      return [](Objective& f, const Bounds& b, std::span<const double> x0, const LocalTolerances& tol, std::uint64_t) {
        NelderMeadOptions o;
        o.tolerances = tol;
        return nelder_mead(f, b, x0, o);
      };
    case Algorithm::differential_evolution: {
      const auto p = de_params(inst);
      p.validate();
      return [p](Objective& f, const Bounds& b, std::span<const double> x0, const LocalTolerances& tol,
                 std::uint64_t seed) { return differential_evolution(f, b, x0, p, tol, seed); };
    }
    case Algorithm::pso: {
      const auto p = pso_params(inst);
      p.validate();
      return [p](Objective& f, const Bounds& b, std::span<const double> x0, const LocalTolerances& tol,
                 std::uint64_t seed) { return pso(f, b, x0, p, tol, seed); };
    }
    case Algorithm::dual_annealing: {
      const auto p = dual_annealing_params(inst);
      p.validate();
      return [p](Objective& f, const Bounds& b, std::span<const double> x0, const LocalTolerances& tol,
                 std::uint64_t seed) { return dual_annealing(f, b, x0, p, tol, seed); };
    }
    case Algorithm::cma_es: {
      const auto p = cma_es_params(inst);
      p.validate();
      return [p](Objective& f, const Bounds& b, std::span<const double> x0, const LocalTolerances& tol,
                 std::uint64_t seed) { return cma_es(f, b, x0, p, tol, seed); };
    }
  }
  throw ConfigError("unknown algorithm");
}

}  // namespace terrabench
