#include <cmath>
#include <functional>
#include <vector>

#include <gtest/gtest.h>

#include "terrabench/optimizers.hpp"

using namespace terrabench;

namespace {

// Concave bowl with its maximum 1000 at (30, 70) on [0, 100]^2.
class Bowl final : public Objective {
 public:
  explicit Bowl(std::size_t stop_after = 0) : stop_after_(stop_after) {}
  double evaluate(std::span<const double> x) override {
    ++calls;
    for (std::size_t i = 0; i < x.size(); ++i) {
      EXPECT_GE(x[i], 0.0);
      EXPECT_LE(x[i], 100.0);
    }
    return 1000.0 - (x[0] - 30.0) * (x[0] - 30.0) - (x[1] - 70.0) * (x[1] - 70.0);
  }
  bool stop_requested() const override { return stop_after_ > 0 && calls >= stop_after_; }
  std::size_t calls = 0;

 private:
  std::size_t stop_after_;
};

const Bounds kBox{{0.0, 0.0}, {100.0, 100.0}};
const std::vector<double> kStart{90.0, 10.0};

using Run = std::function<OptimizeResult(Objective&, std::uint64_t)>;

LocalTolerances tight() { return {1e-8, 1e-8}; }

struct Named {
  const char* name;
  Run run;
  double accuracy;
};

std::vector<Named> all_optimizers() {
  return {
      {"nelder_mead",
       [](Objective& f, std::uint64_t) {
         NelderMeadOptions o;
         o.tolerances = tight();
         return nelder_mead(f, kBox, kStart, o);
       },
       1e-2},
      {"differential_evolution",
       [](Objective& f, std::uint64_t s) { return differential_evolution(f, kBox, kStart, {}, tight(), s); }, 1e-2},
      {"pso",
       [](Objective& f, std::uint64_t s) {
         PsoParams p;
         p.sigma0 = 30.0;
         p.population_size = 20;
         return pso(f, kBox, kStart, p, tight(), s);
       },
       0.5},
      {"cma_es",
       [](Objective& f, std::uint64_t s) {
         CmaEsParams p;
         p.sigma0 = 20.0;
         return cma_es(f, kBox, kStart, p, tight(), s);
       },
       1e-2},
      {"dual_annealing",
       [](Objective& f, std::uint64_t s) {
         DualAnnealingParams p;
         p.max_iterations = 50;
         return dual_annealing(f, kBox, kStart, p, tight(), s);
       },
       1e-2},
  };
}

}  // namespace

TEST(Optimizers, FindTheBowlMaximumAndCountEvaluations) {
  for (const auto& o : all_optimizers()) {
    Bowl f;
    const auto r = o.run(f, 42);
    ASSERT_EQ(r.x.size(), 2u) << o.name;
    EXPECT_NEAR(r.x[0], 30.0, o.accuracy * 10) << o.name;
    EXPECT_NEAR(r.x[1], 70.0, o.accuracy * 10) << o.name;
    EXPECT_NEAR(r.height, 1000.0, o.accuracy) << o.name;
    EXPECT_EQ(r.evaluations, f.calls) << o.name;
  }
}

TEST(Optimizers, DeterministicForASeed) {
  for (const auto& o : all_optimizers()) {
    Bowl a;
    Bowl b;
    const auto ra = o.run(a, 7);
    const auto rb = o.run(b, 7);
    EXPECT_EQ(ra.x, rb.x) << o.name;
    EXPECT_EQ(ra.evaluations, rb.evaluations) << o.name;
  }
}

TEST(Optimizers, HonourExternalStop) {
  for (const auto& o : all_optimizers()) {
    Bowl f(25);
    const auto r = o.run(f, 3);
    EXPECT_EQ(r.reason, StopReason::external) << o.name;
    EXPECT_EQ(f.calls, 25u) << o.name;
  }
}

TEST(Optimizers, ClipToTheBoundsWhenThePeakIsOutside) {
  // Increasing in both coordinates: the maximum is the corner (100, 100).
  FunctionObjective ramp([](std::span<const double> x) { return x[0] + x[1]; });
  NelderMeadOptions o;
  o.tolerances = tight();
  const auto r = nelder_mead(ramp, kBox, kStart, o);
  EXPECT_NEAR(r.height, 200.0, 1e-6);
  CmaEsParams c;
  c.sigma0 = 50.0;
  const auto rc = cma_es(ramp, kBox, kStart, c, tight(), 1);
  EXPECT_NEAR(rc.height, 200.0, 1e-3);
}

TEST(NelderMead, StopsOnFunctionOrStepTolerance) {
  Bowl f;
  NelderMeadOptions loose;
  loose.tolerances = {1.0, 1e-12};
  const auto r = nelder_mead(f, kBox, kStart, loose);
  EXPECT_EQ(r.reason, StopReason::f_tol);
  Bowl g;
  NelderMeadOptions steps;
  steps.tolerances = {1e-12, 1.0};
  const auto s = nelder_mead(g, kBox, kStart, steps);
  EXPECT_EQ(s.reason, StopReason::x_tol);
}

TEST(DifferentialEvolution, MutationFactorAndValidation) {
  DifferentialEvolutionParams p;
  p.mutation_low = 0.3;
  p.mutation_high = 0.9;
  Rng rng(1);
  for (int i = 0; i < 1000; ++i) {
    const double m = p.mutation_factor(rng);
    ASSERT_GE(m, 0.3);
    ASSERT_LT(m, 0.9);
  }
  p.dithering = false;
  EXPECT_EQ(p.mutation_factor(rng), 0.3);
  p.dithering = true;
  p.mutation_high = 0.2;
  EXPECT_THROW(p.validate(), ConfigError);

  std::vector<double> seen;
  DifferentialEvolutionHooks hooks;
  hooks.on_generation = [&](std::size_t, double m) { seen.push_back(m); };
  Bowl f;
  differential_evolution(f, kBox, kStart, {}, tight(), 5, hooks);
  ASSERT_GT(seen.size(), 2u);
  EXPECT_NE(seen[0], seen[1]);

  DifferentialEvolutionParams tiny;
  tiny.popsize = 1;  // 1 * dim = 2 members: too few for rand/1
  Bowl g;
  EXPECT_THROW(differential_evolution(g, kBox, kStart, tiny, tight(), 1), ConfigError);
}

TEST(Pso, ConstrictionCoefficients) {
  const auto c = pso_coefficients(0.5);
  EXPECT_NEAR(c.chi, 2.0 / (2.1 + std::sqrt(0.41)), 1e-15);
  EXPECT_NEAR(c.chi, 0.729843788, 1e-9);
  EXPECT_DOUBLE_EQ(c.personal, 2.05);
  EXPECT_DOUBLE_EQ(c.global, 2.05);
  EXPECT_DOUBLE_EQ(pso_coefficients(0.0).global, 0.0);
  EXPECT_DOUBLE_EQ(pso_coefficients(1.0).personal, 0.0);
  PsoParams p;
  p.r = 1.5;
  EXPECT_THROW(p.validate(), ConfigError);
}

TEST(Pso, StopsAfterStallWindow) {
  FunctionObjective flat([](std::span<const double>) { return 1.0; });
  PsoParams p;
  p.population_size = 4;
  p.stall_window = 20;
  const auto r = pso(flat, kBox, kStart, p, tight(), 9);
  EXPECT_EQ(r.reason, StopReason::stalled);
  // One initial sweep plus 20 stalled iterations.
  EXPECT_EQ(r.evaluations, 4u * 21u);
}

TEST(CmaEs, ValidatesPopulation) {
  CmaEsParams p;
  p.population_size = 3;
  EXPECT_THROW(p.validate(), ConfigError);
}

TEST(DualAnnealing, TemperatureSchedule) {
  DualAnnealingParams p;
  p.max_iterations = 5;
  p.local_search = false;
  std::vector<double> temps;
  DualAnnealingHooks hooks;
  hooks.on_iteration = [&](std::size_t, std::size_t, double t) { temps.push_back(t); };
  Bowl f;
  dual_annealing(f, kBox, kStart, p, tight(), 1, hooks);
  ASSERT_EQ(temps.size(), 5u);
  const double qv1 = p.visit - 1.0;
  for (std::size_t k = 0; k < temps.size(); ++k) {
    const double expected = p.initial_temp * (std::pow(2.0, qv1) - 1.0) / (std::pow(k + 2.0, qv1) - 1.0);
    EXPECT_NEAR(temps[k], expected, 1e-9 * expected) << k;
  }
  // Each iteration makes 2n visits after the initial evaluation.
  EXPECT_EQ(f.calls, 1u + 5u * 4u);
}

TEST(DualAnnealing, RestartsWhenTemperatureDropsBelowRatio) {
  DualAnnealingParams p;
  p.max_iterations = 40;
  p.local_search = false;
  // T_k / T0 < 0.05 after a handful of iterations with visit 2.62.
  p.restart_temp_ratio = 0.05;
  std::vector<std::size_t> restarts;
  std::vector<double> temps;
  DualAnnealingHooks hooks;
  hooks.on_iteration = [&](std::size_t, std::size_t restart, double t) {
    restarts.push_back(restart);
    temps.push_back(t);
  };
  Bowl f;
  dual_annealing(f, kBox, kStart, p, tight(), 2, hooks);
  ASSERT_GT(restarts.back(), 0u);
  for (std::size_t k = 1; k < temps.size(); ++k) {
    if (restarts[k] == restarts[k - 1]) {
      EXPECT_LT(temps[k], temps[k - 1]);
    } else {
      EXPECT_DOUBLE_EQ(temps[k], p.initial_temp);
    }
    EXPECT_GE(temps[k], p.initial_temp * p.restart_temp_ratio);
  }
  DualAnnealingParams bad;
  bad.visit = 3.0;
  EXPECT_THROW(bad.validate(), ConfigError);
}

TEST(Launchers, BuildEveryAlgorithmFromDefaults) {
  for (Algorithm a : kAllAlgorithms) {
    const auto launcher = make_launcher(OptimizerInstance::make(a));
    Bowl f(300);
    launcher(f, kBox, kStart, {1e-4, 1e-4}, 11);
    EXPECT_GT(f.calls, 0u) << algorithm_name(a);
    EXPECT_LE(f.calls, 300u) << algorithm_name(a);
  }
}

TEST(DifferentialEvolution, WithoutDitheringEveryGenerationUsesMutationLow) {
  DifferentialEvolutionParams p;
  p.dithering = false;
  p.mutation_low = 0.65;
  std::vector<double> seen;
  DifferentialEvolutionHooks hooks;
  hooks.on_generation = [&](std::size_t, double m) { seen.push_back(m); };
  Bowl f;
  differential_evolution(f, kBox, kStart, p, tight(), 5, hooks);
  ASSERT_FALSE(seen.empty());
  for (double m : seen) EXPECT_EQ(m, 0.65);
}

TEST(CmaEs, SamplePointsInvariantUnderHeightOffset) {
  auto record = [](double offset) {
    std::vector<std::vector<double>> points;
    FunctionObjective f([&](std::span<const double> x) {
      points.emplace_back(x.begin(), x.end());
      return offset + 1000.0 - (x[0] - 30.0) * (x[0] - 30.0) - 3.0 * (x[1] - 70.0) * (x[1] - 70.0);
    });
    CmaEsParams p;
    p.sigma0 = 20.0;
    cma_es(f, kBox, kStart, p, {1e-6, 1e-6}, 13);
    return points;
  };
  // Offsets that keep the f_tol history spans exact in floating point.
  const auto a = record(0.0);
  const auto b = record(4096.0);
  ASSERT_GT(a.size(), 12u);
  const std::size_t n = std::min(a.size(), b.size());
  for (std::size_t i = 0; i < n; ++i) ASSERT_EQ(a[i], b[i]) << i;
}
