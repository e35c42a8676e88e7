#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "terrabench/errors.hpp"
#include "terrabench/io_util.hpp"

namespace terrabench {

enum class Algorithm { nelder_mead, differential_evolution, pso, dual_annealing, cma_es };

inline constexpr Algorithm kAllAlgorithms[] = {Algorithm::nelder_mead, Algorithm::differential_evolution,
                                               Algorithm::pso, Algorithm::dual_annealing, Algorithm::cma_es};

inline std::string_view algorithm_name(Algorithm a) {
  switch (a) {
    case Algorithm::nelder_mead: return "nelder_mead";
    case Algorithm::differential_evolution: return "differential_evolution";
    case Algorithm::pso: return "pso";
    case Algorithm::dual_annealing: return "dual_annealing";
    case Algorithm::cma_es: return "cma_es";
  }
  return "unknown";
}

inline Algorithm parse_algorithm(std::string_view name) {
  for (Algorithm a : kAllAlgorithms) {
    if (algorithm_name(a) == name) return a;
  }
  throw ConfigError("unknown algorithm '" + std::string(name) + "'");
}

enum class Scale { linear, log, integer, boolean };

inline std::string_view scale_name(Scale s) {
  switch (s) {
    case Scale::linear: return "linear";
    case Scale::log: return "log";
    case Scale::integer: return "int";
    case Scale::boolean: return "bool";
  }
  return "unknown";
}

/// One tunable hyperparameter. Booleans are stored as 0/1 and ignore the range.
struct HyperparameterSpec {
  std::string name;
  double low = 0.0;
  double high = 1.0;
  Scale scale = Scale::linear;
  double default_value = 0.0;
  /// Name of a parameter whose value replaces `low` (mutation_high >= mutation_low).
  std::string low_from;
};

using HyperparameterValues = std::map<std::string, double>;

class HyperparameterSpace {
 public:
  HyperparameterSpace() = default;
  explicit HyperparameterSpace(std::vector<HyperparameterSpec> specs) : specs_(std::move(specs)) { check(); }

  const std::vector<HyperparameterSpec>& specs() const noexcept { return specs_; }
  bool empty() const noexcept { return specs_.empty(); }

  const HyperparameterSpec* find(std::string_view name) const {
    for (const auto& s : specs_) {
      if (s.name == name) return &s;
    }
    return nullptr;
  }

  /// Effective lower bound of `spec` given the other values.
  double low_of(const HyperparameterSpec& spec, const HyperparameterValues& values) const {
    if (spec.low_from.empty()) return spec.low;
    const auto it = values.find(spec.low_from);
    return it == values.end() ? spec.low : std::max(spec.low, it->second);
  }

  HyperparameterValues defaults() const {
    HyperparameterValues v;
    for (const auto& s : specs_) v[s.name] = s.default_value;
    return v;
  }

  /// Throws ConfigError naming the offending parameter and its range.
  void validate(const HyperparameterValues& values, std::string_view context = "") const {
    const std::string prefix = context.empty() ? "" : std::string(context) + ": ";
    for (const auto& [name, value] : values) {
      if (!find(name)) throw ConfigError(prefix + "unknown hyperparameter '" + name + "'");
    }
    for (const auto& s : specs_) {
      const auto it = values.find(s.name);
      if (it == values.end()) throw ConfigError(prefix + "missing hyperparameter '" + s.name + "'");
      const double v = it->second;
      if (s.scale == Scale::boolean) {
        if (v != 0.0 && v != 1.0) throw ConfigError(prefix + s.name + " must be a boolean");
        continue;
      }
      const double lo = low_of(s, values);
      if (!(v >= lo && v <= s.high)) {
        throw ConfigError(prefix + s.name + " = " + format_double(v) + " lies outside [" + format_double(lo) + ", " +
                          format_double(s.high) + "]");
      }
      if (s.scale == Scale::integer && v != std::round(v)) {
        throw ConfigError(prefix + s.name + " must be an integer");
      }
    }
  }

 private:
  void check() const {
    for (const auto& s : specs_) {
      if (s.scale == Scale::boolean) continue;
      if (!(s.low <= s.high)) throw ConfigError("hyperparameter " + s.name + " has an inverted range");
      if (s.scale == Scale::log && !(s.low > 0.0)) {
        throw ConfigError("log-scale hyperparameter " + s.name + " needs a positive range");
      }
      if (s.scale == Scale::integer && (s.low != std::round(s.low) || s.high != std::round(s.high))) {
        throw ConfigError("integer hyperparameter " + s.name + " needs an integral range");
      }
      if (!(s.default_value >= s.low && s.default_value <= s.high)) {
        throw ConfigError("default of " + s.name + " lies outside its range");
      }
    }
  }

  std::vector<HyperparameterSpec> specs_;
};

/// Tuning space of each algorithm.
inline HyperparameterSpace default_space(Algorithm a) {
  switch (a) {
    case Algorithm::nelder_mead:
      return HyperparameterSpace();
    case Algorithm::dual_annealing:
      return HyperparameterSpace({
          {"initial_temp", 0.2, 5e4, Scale::log, 5230.0, ""},
          {"restart_temp_ratio", 1e-6, 0.9, Scale::log, 2e-5, ""},
          {"visit", 1.5, 2.9, Scale::linear, 2.62, ""},
          {"accept", -5.0, -1.1e-4, Scale::linear, -5.0, ""},
      });
    case Algorithm::cma_es:
      return HyperparameterSpace({
          {"sigma0", 3.5e4, 3.5e5, Scale::linear, 1.2e5, ""},
          {"population_size", 4, 100, Scale::integer, 6, ""},
      });
    case Algorithm::pso:
      return HyperparameterSpace({
          {"sigma0", 3.5e4, 3.5e5, Scale::linear, 1.2e5, ""},
          {"r", 0.0, 1.0, Scale::linear, 0.5, ""},
          {"population_size", 1, 1000, Scale::integer, 6, ""},
      });
    case Algorithm::differential_evolution:
      return HyperparameterSpace({
          {"popsize", 10, 50, Scale::integer, 15, ""},
          {"recombination", 0.0, 1.0, Scale::linear, 0.7, ""},
          {"polish", 0, 1, Scale::boolean, 0, ""},
          {"dithering", 0, 1, Scale::boolean, 1, ""},
          {"mutation_low", 0.0, 2.0, Scale::linear, 0.5, ""},
          {"mutation_high", 0.0, 2.0, Scale::linear, 1.0, "mutation_low"},
      });
  }
  throw ConfigError("unknown algorithm");
}

/// An algorithm with every hyperparameter assigned.
struct OptimizerInstance {
  Algorithm algorithm = Algorithm::nelder_mead;
  HyperparameterValues values;

  /// Fills missing values with defaults, then validates against `space`.
  static OptimizerInstance make(Algorithm a, HyperparameterValues values, const HyperparameterSpace& space) {
    for (const auto& s : space.specs()) values.try_emplace(s.name, s.default_value);
    space.validate(values, algorithm_name(a));
    return {a, std::move(values)};
  }

  static OptimizerInstance make(Algorithm a, HyperparameterValues values = {}) {
    return make(a, std::move(values), default_space(a));
  }

  double get(const std::string& name) const {
    const auto it = values.find(name);
    if (it == values.end()) throw ConfigError("instance has no hyperparameter '" + name + "'");
    return it->second;
  }

  /// "name=value;name=value" in key order.
  std::string describe() const {
    std::string out;
    for (const auto& [k, v] : values) {
      if (!out.empty()) out += ';';
      out += k + "=" + format_double(v);
    }
    return out;
  }
};

}  // namespace terrabench
