#pragma once

// TOML benchmark configuration. Every table rejects keys it does not know.
//
//   seed = 0                    # base seed of runs and studies
//   [data]                      # source = "synthetic" | "cache" | "asc"
//   [data.synthetic]            # seed, nrows, ncols, ruggedness, cell_size
//   [[bands]]                   # low, high, score, colour, label (default: GB bands)
//   [run]                       # f_target, T_max, f_tol, x_tol, multistart, runs | total_evals
//   [algorithm]                 # name
//   [algorithm.hyperparameters] # values; missing ones take defaults
//   [tune]                      # M, T_instance, min_runs, prune, sampler, startup_trials
//   [tune.space.<name>]         # low, high: narrow a range of the default space
//   [report]                    # target = [x, y], ert_targets, ert_low
//   [output]                    # dir
//   [parallel]                  # jobs

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <initializer_list>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <toml.hpp>

#include "terrabench/asc_io.hpp"
#include "terrabench/bands.hpp"
#include "terrabench/errors.hpp"
#include "terrabench/harness.hpp"
#include "terrabench/hyperparameters.hpp"
#include "terrabench/terrain.hpp"
#include "terrabench/tuner.hpp"

namespace terrabench {

/// Environment variable that overrides the cache file location.
inline constexpr const char* kCacheEnvVar = "TERRABENCH_CACHE";

struct SyntheticSpec {
  std::uint64_t seed = 1;
  std::size_t nrows = 64;
  std::size_t ncols = 64;
  double ruggedness = 0.5;
  double cell_size = 50.0;
};

struct DataSource {
  enum class Kind { synthetic, cache, asc };
  Kind kind = Kind::synthetic;
  SyntheticSpec synthetic;
  std::filesystem::path cache;
  std::filesystem::path asc_dir;
  std::filesystem::path patch;
};

struct BenchConfig {
  std::uint64_t seed = 0;
  DataSource data;
  ScoreSchedule bands = default_schedule();
  RunConfig run;
  bool multistart = true;
  Budget budget = Budget::runs(10);
  std::optional<OptimizerInstance> instance;
  Algorithm algorithm = Algorithm::nelder_mead;
  HyperparameterSpace space;
  TunerOptions tune;
  std::optional<std::array<double, 2>> report_target;
  std::size_t ert_targets = 50;
  std::optional<double> ert_low;
  std::filesystem::path output_dir = "out";
  std::size_t jobs = 1;
};

namespace detail {

inline void check_keys(const toml::table& t, std::initializer_list<std::string_view> allowed,
                       const std::string& where) {
  for (const auto& [key, node] : t) {
    bool ok = false;
    for (auto a : allowed) ok = ok || key.str() == a;
    if (!ok) throw ConfigError("unknown key '" + std::string(key.str()) + "' in " + where);
  }
}

inline const toml::table* sub_table(const toml::table& t, std::string_view key, const std::string& where) {
  const toml::node* n = t.get(key);
  if (!n) return nullptr;
  if (!n->is_table()) throw ConfigError(where + "." + std::string(key) + " must be a table");
  return n->as_table();
}

inline std::optional<double> get_number(const toml::table& t, std::string_view key, const std::string& where) {
  const toml::node* n = t.get(key);
  if (!n) return std::nullopt;
  if (auto v = n->value<double>(); v && (n->is_integer() || n->is_floating_point())) return *v;
  throw ConfigError(where + "." + std::string(key) + " must be a number");
}

inline std::optional<std::int64_t> get_int(const toml::table& t, std::string_view key, const std::string& where) {
  const toml::node* n = t.get(key);
  if (!n) return std::nullopt;
  if (n->is_integer()) return n->as_integer()->get();
  if (n->is_floating_point()) {
    const double d = n->as_floating_point()->get();
    if (d == std::floor(d) && std::abs(d) < 9e15) return static_cast<std::int64_t>(d);
  }
  throw ConfigError(where + "." + std::string(key) + " must be an integer");
}

inline std::optional<std::size_t> get_count(const toml::table& t, std::string_view key, const std::string& where) {
  const auto v = get_int(t, key, where);
  if (!v) return std::nullopt;
  if (*v < 0) throw ConfigError(where + "." + std::string(key) + " must be nonnegative");
  return static_cast<std::size_t>(*v);
}

inline std::optional<bool> get_bool(const toml::table& t, std::string_view key, const std::string& where) {
  const toml::node* n = t.get(key);
  if (!n) return std::nullopt;
  if (!n->is_boolean()) throw ConfigError(where + "." + std::string(key) + " must be a boolean");
  return n->as_boolean()->get();
}

inline std::optional<std::string> get_string(const toml::table& t, std::string_view key, const std::string& where) {
  const toml::node* n = t.get(key);
  if (!n) return std::nullopt;
  if (!n->is_string()) throw ConfigError(where + "." + std::string(key) + " must be a string");
  return n->as_string()->get();
}

inline std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  const std::filesystem::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

}  // namespace detail

/// Parses a configuration document. Relative paths resolve against `base_dir`.
inline BenchConfig parse_config(std::string_view text, const std::string& source = "config",
                                const std::filesystem::path& base_dir = {}) {
  using namespace detail;
  toml::table root;
  try {
    root = toml::parse(text, source);
  } catch (const toml::parse_error& e) {
    throw ConfigError(source + ":" + std::to_string(e.source().begin.line) + ": " + std::string(e.description()));
  }
  check_keys(root, {"seed", "data", "bands", "run", "algorithm", "tune", "report", "output", "parallel"}, "config");

  BenchConfig c;
  if (auto v = get_int(root, "seed", "config")) c.seed = static_cast<std::uint64_t>(*v);

  if (const auto* d = sub_table(root, "data", "config")) {
    check_keys(*d, {"source", "cache", "asc_dir", "patch", "synthetic"}, "[data]");
    const std::string kind = get_string(*d, "source", "data").value_or("synthetic");
    if (kind == "synthetic") {
      c.data.kind = DataSource::Kind::synthetic;
    } else if (kind == "cache") {
      c.data.kind = DataSource::Kind::cache;
    } else if (kind == "asc") {
      c.data.kind = DataSource::Kind::asc;
    } else {
      throw ConfigError("data.source must be \"synthetic\", \"cache\" or \"asc\"");
    }
    if (auto v = get_string(*d, "cache", "data")) c.data.cache = resolve(base_dir, *v);
    if (auto v = get_string(*d, "asc_dir", "data")) c.data.asc_dir = resolve(base_dir, *v);
    if (auto v = get_string(*d, "patch", "data")) c.data.patch = resolve(base_dir, *v);
    if (const auto* s = sub_table(*d, "synthetic", "data")) {
      check_keys(*s, {"seed", "nrows", "ncols", "ruggedness", "cell_size"}, "[data.synthetic]");
      auto& sp = c.data.synthetic;
      if (auto v = get_int(*s, "seed", "data.synthetic")) sp.seed = static_cast<std::uint64_t>(*v);
      if (auto v = get_count(*s, "nrows", "data.synthetic")) sp.nrows = *v;
      if (auto v = get_count(*s, "ncols", "data.synthetic")) sp.ncols = *v;
      if (auto v = get_number(*s, "ruggedness", "data.synthetic")) sp.ruggedness = *v;
      if (auto v = get_number(*s, "cell_size", "data.synthetic")) sp.cell_size = *v;
      if (sp.nrows < 2 || sp.ncols < 2) throw ConfigError("data.synthetic needs nrows, ncols >= 2");
      if (!(sp.ruggedness >= 0.0 && sp.ruggedness <= 1.0)) {
        throw ConfigError("data.synthetic.ruggedness must lie in [0, 1]");
      }
      if (!(sp.cell_size > 0.0)) throw ConfigError("data.synthetic.cell_size must be > 0");
    }
    if (c.data.kind == DataSource::Kind::asc && c.data.asc_dir.empty()) {
      throw ConfigError("data.source = \"asc\" needs data.asc_dir");
    }
  }
  if (const char* env = std::getenv(kCacheEnvVar); env && *env) c.data.cache = env;
  if (c.data.kind == DataSource::Kind::cache && c.data.cache.empty()) {
    throw ConfigError(std::string("data.source = \"cache\" needs data.cache or ") + kCacheEnvVar);
  }

  if (const toml::node* b = root.get("bands")) {
    const toml::array* arr = b->as_array();
    if (!arr) throw ConfigError("bands must be an array of tables ([[bands]])");
    std::vector<HeightBand> bands;
    for (std::size_t i = 0; i < arr->size(); ++i) {
      const toml::table* t = (*arr)[i].as_table();
      const std::string where = "bands[" + std::to_string(i) + "]";
      if (!t) throw ConfigError(where + " must be a table");
      check_keys(*t, {"low", "high", "score", "colour", "label"}, where);
      HeightBand hb;
      const auto low = get_number(*t, "low", where);
      const auto high = get_number(*t, "high", where);
      if (!low || !high) throw ConfigError(where + " needs low and high");
      hb.low = *low;
      hb.high = *high;
      hb.score = get_number(*t, "score", where).value_or(0.0);
      hb.colour = get_string(*t, "colour", where).value_or("");
      hb.label = get_string(*t, "label", where).value_or(format_double(hb.low) + "-" + format_double(hb.high));
      if (hb.label.find(',') != std::string::npos) throw ConfigError(where + ".label must not contain commas");
      bands.push_back(std::move(hb));
    }
    c.bands = ScoreSchedule(std::move(bands));
  }

  if (const auto* r = sub_table(root, "run", "config")) {
    check_keys(*r, {"f_target", "T_max", "f_tol", "x_tol", "multistart", "runs", "total_evals"}, "[run]");
    if (auto v = get_number(*r, "f_target", "run")) c.run.f_target = *v;
    if (auto v = get_count(*r, "T_max", "run")) c.run.T_max = *v;
    if (auto v = get_number(*r, "f_tol", "run")) c.run.tolerances.f_tol = *v;
    if (auto v = get_number(*r, "x_tol", "run")) c.run.tolerances.x_tol = *v;
    if (auto v = get_bool(*r, "multistart", "run")) c.multistart = *v;
    const auto runs = get_count(*r, "runs", "run");
    const auto total = get_count(*r, "total_evals", "run");
    if (runs && total) throw ConfigError("run.runs and run.total_evals are mutually exclusive");
    if (runs) c.budget = Budget::runs(*runs);
    if (total) c.budget = Budget::evals(*total);
    if (c.budget.amount < 1) throw ConfigError("run budget must be positive");
  }
  c.run.validate();

  if (const auto* a = sub_table(root, "algorithm", "config")) {
    check_keys(*a, {"name", "hyperparameters"}, "[algorithm]");
    const auto name = get_string(*a, "name", "algorithm");
    if (!name) throw ConfigError("algorithm.name is required");
    c.algorithm = parse_algorithm(*name);
    HyperparameterValues values;
    if (const auto* h = sub_table(*a, "hyperparameters", "algorithm")) {
      for (const auto& [key, node] : *h) {
        const std::string k(key.str());
        if (node.is_boolean()) {
          values[k] = node.as_boolean()->get() ? 1.0 : 0.0;
        } else if (auto v = get_number(*h, k, "algorithm.hyperparameters")) {
          values[k] = *v;
        }
      }
    }
    c.space = default_space(c.algorithm);
    c.instance = OptimizerInstance::make(c.algorithm, std::move(values), c.space);
  }

  if (const auto* t = sub_table(root, "tune", "config")) {
    check_keys(*t, {"M", "T_instance", "min_runs", "prune", "sampler", "startup_trials", "space"}, "[tune]");
    if (auto v = get_count(*t, "M", "tune")) c.tune.M = *v;
    if (auto v = get_count(*t, "T_instance", "tune")) c.tune.T_instance = *v;
    if (auto v = get_count(*t, "min_runs", "tune")) c.tune.min_runs = *v;
    if (auto v = get_bool(*t, "prune", "tune")) c.tune.prune = *v;
    if (auto v = get_count(*t, "startup_trials", "tune")) c.tune.startup_trials = *v;
    if (auto v = get_string(*t, "sampler", "tune")) {
      if (*v == "random") {
        c.tune.sampler = SamplerMode::random;
      } else if (*v == "quantile") {
        c.tune.sampler = SamplerMode::quantile;
      } else {
        throw ConfigError("tune.sampler must be \"random\" or \"quantile\"");
      }
    }
    if (const auto* s = sub_table(*t, "space", "tune")) {
      auto specs = c.space.specs();
      for (const auto& [key, node] : *s) {
        const std::string k(key.str());
        auto it = std::find_if(specs.begin(), specs.end(), [&](const auto& sp) { return sp.name == k; });
        if (it == specs.end()) throw ConfigError("tune.space." + k + " is not a hyperparameter of the algorithm");
        const toml::table* r = node.as_table();
        if (!r) throw ConfigError("tune.space." + k + " must be a table");
        check_keys(*r, {"low", "high"}, "[tune.space." + k + "]");
        const double lo = get_number(*r, "low", "tune.space." + k).value_or(it->low);
        const double hi = get_number(*r, "high", "tune.space." + k).value_or(it->high);
        if (lo < it->low || hi > it->high || lo > hi) {
          throw ConfigError("tune.space." + k + " must narrow [" + format_double(it->low) + ", " +
                            format_double(it->high) + "]");
        }
        it->low = lo;
        it->high = hi;
        it->default_value = std::clamp(it->default_value, lo, hi);
      }
      c.space = HyperparameterSpace(std::move(specs));
    }
    c.tune.seed = c.seed;
    c.tune.validate();
  }

  if (const auto* r = sub_table(root, "report", "config")) {
    check_keys(*r, {"target", "ert_targets", "ert_low"}, "[report]");
    if (const toml::node* n = r->get("target")) {
      const toml::array* arr = n->as_array();
      if (!arr || arr->size() != 2 || !(*arr)[0].value<double>() || !(*arr)[1].value<double>()) {
        throw ConfigError("report.target must be [x, y]");
      }
      c.report_target = std::array<double, 2>{*(*arr)[0].value<double>(), *(*arr)[1].value<double>()};
    }
    if (auto v = get_count(*r, "ert_targets", "report")) c.ert_targets = *v;
    if (c.ert_targets < 1) throw ConfigError("report.ert_targets must be >= 1");
    c.ert_low = get_number(*r, "ert_low", "report");
  }

  if (const auto* o = sub_table(root, "output", "config")) {
    check_keys(*o, {"dir"}, "[output]");
    if (auto v = get_string(*o, "dir", "output")) c.output_dir = resolve(base_dir, *v);
  }
  if (const auto* p = sub_table(root, "parallel", "config")) {
    check_keys(*p, {"jobs"}, "[parallel]");
    if (auto v = get_count(*p, "jobs", "parallel")) c.jobs = *v;
  }
  return c;
}

inline BenchConfig load_config(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw ConfigError("config file " + path.string() + " does not exist");
  return parse_config(read_file(path), path.string(), path.parent_path());
}

/// Builds the grid a configuration points at.
inline ElevationGrid load_grid(const DataSource& data) {
  switch (data.kind) {
    case DataSource::Kind::synthetic: {
      const auto& s = data.synthetic;
      return synth_terrain(s.seed, s.nrows, s.ncols, s.ruggedness, s.cell_size);
    }
    case DataSource::Kind::cache:
      if (!std::filesystem::exists(data.cache)) throw ConfigError("cache file " + data.cache.string() + " does not exist");
      return read_cache(data.cache);
    case DataSource::Kind::asc:
      break;
  }
  throw ConfigError("data.source = \"asc\" must be preprocessed into a cache first");
}

/// Serialises an instance as an [algorithm] TOML table.
inline std::string instance_toml(const OptimizerInstance& inst, const HyperparameterSpace& space) {
  std::string out = "[algorithm]\nname = \"" + std::string(algorithm_name(inst.algorithm)) + "\"\n";
  if (inst.values.empty()) return out;
  out += "\n[algorithm.hyperparameters]\n";
  for (const auto& [k, v] : inst.values) {
    const auto* spec = space.find(k);
    std::string value = format_double(v);
    if (spec && spec->scale == Scale::boolean) {
      value = v != 0.0 ? "true" : "false";
    } else if (value.find_first_of(".en") == std::string::npos) {
      value += spec && spec->scale == Scale::integer ? "" : ".0";
    }
    out += k + " = " + value + "\n";
  }
  return out;
}

}  // namespace terrabench
