#pragma once

// Benchmark runs: seeded initial guesses, evaluation recording, termination
// by the global criteria, returned-height truncation and the multistart
// wrapper that turns early-terminating optimizers into global ones.
//
// Seeds. The initial guess of run i comes from Rng(i). The optimizer seed of
// run i is run_seed(base, i) = hash_combine(base, i); launch k of a multistart
// run uses Rng(hash_combine(run_seed, k)), whose first two uniforms give the
// start point of launches k >= 1 and whose third output seeds the optimizer.

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "terrabench/errors.hpp"
#include "terrabench/grid.hpp"
#include "terrabench/io_util.hpp"
#include "terrabench/objective.hpp"
#include "terrabench/optimizers.hpp"
#include "terrabench/rng.hpp"
#include "terrabench/terrain.hpp"

namespace terrabench {

/// Global and local termination criteria.
struct RunConfig {
  double f_target = 1340.0;
  std::size_t T_max = 50000;
  LocalTolerances tolerances;

  void validate() const {
    if (T_max < 1) throw ConfigError("T_max must be >= 1");
    tolerances.validate();
  }
};

struct Evaluation {
  double x = 0.0;
  double y = 0.0;
  double h = 0.0;

  friend bool operator==(const Evaluation&, const Evaluation&) = default;
};

struct EvalTrace {
  std::size_t run_index = 0;
  std::uint64_t seed = 0;
  std::vector<Evaluation> evals;
};

struct RunResult {
  std::size_t run_index = 0;
  /// Charged evaluations.
  std::size_t T = 0;
  double returned_height = -std::numeric_limits<double>::infinity();
  bool success = false;
  /// Optimizer launches (1 without multistart).
  std::size_t launches = 1;
};

/// Height of a 2-D point. Must be safe to call concurrently.
using HeightFunction = std::function<double(double x, double y)>;

inline HeightFunction terrain_height(const ElevationGrid& grid) {
  return [&grid](double x, double y) { return interpolate(grid, x, y); };
}

inline std::array<double, 2> initial_guess(std::size_t run_index, const DomainRect& domain = {}) {
  Rng rng(run_index);
  const double u = rng.uniform();
  const double v = rng.uniform();
  return {u * domain.width, v * domain.height};
}

inline std::uint64_t run_seed(std::uint64_t base_seed, std::size_t run_index) {
  return hash_combine(base_seed, run_index);
}

/// Max height over the charged prefix: the first T_max evaluations, cut after
/// the first one reaching f_target. Returns (height, T).
inline std::pair<double, std::size_t> returned_height(std::span<const Evaluation> trace, const RunConfig& config) {
  if (trace.empty()) throw std::invalid_argument("returned_height needs a nonempty trace");
  const std::size_t limit = std::min(trace.size(), config.T_max);
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < limit; ++i) {
    best = std::max(best, trace[i].h);
    if (trace[i].h >= config.f_target) return {best, i + 1};
  }
  return {best, limit};
}

inline RunResult make_result(const EvalTrace& trace, const RunConfig& config, std::size_t launches = 1) {
  const auto [h, T] = returned_height(trace.evals, config);
  return {trace.run_index, T, h, h >= config.f_target, launches};
}

/// Objective that records every evaluation and requests a stop once the
/// target is reached or T_max evaluations have been made.
class RunRecorder final : public Objective {
 public:
  RunRecorder(HeightFunction height, const RunConfig& config) : height_(std::move(height)), config_(config) {}

  double evaluate(std::span<const double> x) override {
    const double px = x[0];
    const double py = x.size() > 1 ? x[1] : 0.0;
    const double h = height_(px, py);
    evals_.push_back({px, py, h});
    if (h >= config_.f_target) reached_ = true;
    return h;
  }

  bool stop_requested() const override { return reached_ || evals_.size() >= config_.T_max; }

  std::vector<Evaluation>& evals() noexcept { return evals_; }

 private:
  HeightFunction height_;
  const RunConfig& config_;
  std::vector<Evaluation> evals_;
  bool reached_ = false;
};

struct RunOutcome {
  RunResult result;
  EvalTrace trace;
};

/// One run of `launcher`, optionally wrapped in multistart. The trace is
/// truncated to the charged prefix.
inline RunOutcome execute_run(const Launcher& launcher, const HeightFunction& height, const DomainRect& domain,
                              const RunConfig& config, std::size_t run_index, std::uint64_t base_seed,
                              bool multistart) {
  config.validate();
  RunRecorder recorder(height, config);
  const Bounds bounds = Bounds::rect(domain);
  const std::uint64_t seed = run_seed(base_seed, run_index);
  std::size_t launches = 0;
  while (!recorder.stop_requested()) {
    Rng launch_rng(hash_combine(seed, launches));
    std::array<double, 2> start{};
    if (launches == 0) {
      start = initial_guess(run_index, domain);
      launch_rng.next();
      launch_rng.next();
    } else {
      start = {launch_rng.uniform() * domain.width, launch_rng.uniform() * domain.height};
    }
    const std::size_t before = recorder.evals().size();
    launcher(recorder, bounds, start, config.tolerances, launch_rng.next());
    ++launches;
    if (!multistart) break;
    if (recorder.evals().size() == before) throw std::runtime_error("optimizer launch made no evaluations");
  }
  if (recorder.evals().empty()) throw std::runtime_error("optimizer made no evaluations");
  EvalTrace trace{run_index, seed, std::move(recorder.evals())};
  RunResult result = make_result(trace, config, launches);
  trace.evals.resize(result.T);
  return {result, std::move(trace)};
}

struct Budget {
  enum class Mode { fixed_runs, total_evals };
  Mode mode = Mode::fixed_runs;
  std::size_t amount = 1;

  static Budget runs(std::size_t n) { return {Mode::fixed_runs, n}; }
  static Budget evals(std::size_t t) { return {Mode::total_evals, t}; }
};

struct InstanceRunOptions {
  bool multistart = true;
  std::uint64_t base_seed = 0;
  /// Concurrent runs; 0 means hardware concurrency.
  std::size_t jobs = 1;
  /// Called after each run in run_index order; return false to stop early.
  std::function<bool(const RunOutcome&)> on_run;
};

/// Runs with indices 0, 1, 2, ... until the budget is used. In total_evals
/// mode the last run may overrun: T_instance <= sum T < T_instance + T_max.
/// Runs execute in parallel batches; results are identical for any `jobs`.
inline std::vector<RunOutcome> run_instance(const Launcher& launcher, const HeightFunction& height,
                                            const DomainRect& domain, const RunConfig& config, const Budget& budget,
                                            const InstanceRunOptions& options = {}) {
  config.validate();
  if (budget.amount < 1) throw ConfigError("budget must be positive");
  std::size_t jobs = options.jobs == 0 ? std::max(1u, std::thread::hardware_concurrency()) : options.jobs;
  if (budget.mode == Budget::Mode::fixed_runs) jobs = std::min(jobs, budget.amount);

  std::vector<RunOutcome> out;
  std::size_t spent = 0;
  auto done = [&] {
    return budget.mode == Budget::Mode::fixed_runs ? out.size() >= budget.amount : spent >= budget.amount;
  };
  std::size_t next_index = 0;
  while (!done()) {
    std::size_t batch = jobs;
    if (budget.mode == Budget::Mode::fixed_runs) batch = std::min(batch, budget.amount - out.size());
    std::vector<RunOutcome> results(batch);
    if (batch == 1) {
      results[0] = execute_run(launcher, height, domain, config, next_index, options.base_seed, options.multistart);
    } else {
      std::vector<std::exception_ptr> errors(batch);
      std::vector<std::thread> threads;
      for (std::size_t b = 0; b < batch; ++b) {
        threads.emplace_back([&, b] {
          try {
            results[b] = execute_run(launcher, height, domain, config, next_index + b, options.base_seed,
                                     options.multistart);
          } catch (...) {
            errors[b] = std::current_exception();
          }
        });
      }
      for (auto& t : threads) t.join();
      for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
      }
    }
    next_index += batch;
    for (auto& r : results) {
      if (done()) break;
      spent += r.result.T;
      out.push_back(std::move(r));
      if (options.on_run && !options.on_run(out.back())) return out;
    }
  }
  return out;
}

inline std::vector<RunResult> results_of(const std::vector<RunOutcome>& outcomes) {
  std::vector<RunResult> r;
  r.reserve(outcomes.size());
  for (const auto& o : outcomes) r.push_back(o.result);
  return r;
}

// ---------------------------------------------------------------------------
// Files

inline std::string trace_csv(const EvalTrace& trace) {
  std::string out = "eval_index,x,y,h\n";
  for (std::size_t i = 0; i < trace.evals.size(); ++i) {
    const auto& e = trace.evals[i];
    out += std::to_string(i + 1) + "," + format_double(e.x) + "," + format_double(e.y) + "," + format_double(e.h) +
           "\n";
  }
  return out;
}

inline std::string trace_file_name(std::size_t run_index) {
  std::string n = std::to_string(run_index);
  if (n.size() < 6) n.insert(0, 6 - n.size(), '0');
  return "trace_" + n + ".csv";
}

inline EvalTrace parse_trace_csv(std::string_view text, std::size_t run_index, const std::string& source = "trace") {
  const CsvTable t = parse_csv(text, source);
  if (t.header != std::vector<std::string>{"eval_index", "x", "y", "h"}) {
    throw ParseError(source, 1, "expected header eval_index,x,y,h");
  }
  EvalTrace trace;
  trace.run_index = run_index;
  for (const auto& row : t.rows) trace.evals.push_back({parse_double(row[1]), parse_double(row[2]), parse_double(row[3])});
  return trace;
}

inline std::string results_csv(const std::vector<RunResult>& results) {
  std::string out = "run_index,T,returned_height,success,launches\n";
  for (const auto& r : results) {
    out += std::to_string(r.run_index) + "," + std::to_string(r.T) + "," + format_double(r.returned_height) + "," +
           (r.success ? "1" : "0") + "," + std::to_string(r.launches) + "\n";
  }
  return out;
}

inline std::vector<RunResult> parse_results_csv(std::string_view text, const std::string& source = "results") {
  const CsvTable t = parse_csv(text, source);
  if (t.header != std::vector<std::string>{"run_index", "T", "returned_height", "success", "launches"}) {
    throw ParseError(source, 1, "expected header run_index,T,returned_height,success,launches");
  }
  std::vector<RunResult> out;
  for (const auto& row : t.rows) {
    out.push_back({static_cast<std::size_t>(parse_double(row[0])), static_cast<std::size_t>(parse_double(row[1])),
                   parse_double(row[2]), row[3] == "1", static_cast<std::size_t>(parse_double(row[4]))});
  }
  return out;
}

inline void write_traces(const std::vector<RunOutcome>& outcomes, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  for (const auto& o : outcomes) write_file_atomic(dir / trace_file_name(o.trace.run_index), trace_csv(o.trace));
}

/// Loads trace_*.csv files of `dir` in run-index order.
inline std::vector<EvalTrace> read_traces(const std::filesystem::path& dir) {
  std::vector<std::pair<std::size_t, std::filesystem::path>> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    if (name.starts_with("trace_") && name.ends_with(".csv")) {
      files.emplace_back(static_cast<std::size_t>(std::stoull(name.substr(6, name.size() - 10))), entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  std::vector<EvalTrace> out;
  for (const auto& [index, path] : files) out.push_back(parse_trace_csv(read_file(path), index, path.string()));
  return out;
}

}  // namespace terrabench
