#pragma once

// Hyperparameter tuning by GERT with median pruning.
//
// Trials run sequentially. Each trial samples an instance, runs it until its
// evaluation budget T_instance is spent, reporting the running GERT after every
// run to the pruner. The study keeps the complete trial with the lowest final
// GERT (the first complete trial wins ties, including all-infinite studies).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "terrabench/bands.hpp"
#include "terrabench/harness.hpp"
#include "terrabench/hyperparameters.hpp"
#include "terrabench/io_util.hpp"
#include "terrabench/measures.hpp"
#include "terrabench/rng.hpp"

namespace terrabench {

enum class TrialStatus { running, pruned, complete };

inline std::string_view trial_status_name(TrialStatus s) {
  switch (s) {
    case TrialStatus::running: return "running";
    case TrialStatus::pruned: return "pruned";
    case TrialStatus::complete: return "complete";
  }
  return "unknown";
}

struct Trial {
  std::size_t number = 0;
  HyperparameterValues values;
  std::vector<RunResult> runs;
  /// GERT after each run; reports[k] covers runs 0..k.
  std::vector<double> reports;
  TrialStatus status = TrialStatus::running;
  /// Set for complete trials only.
  std::optional<double> final_gert;

  std::size_t spent() const {
    std::size_t t = 0;
    for (const auto& r : runs) t += r.T;
    return t;
  }
};

struct Study {
  std::vector<Trial> trials;
  std::optional<std::size_t> best;

  const Trial* best_trial() const { return best ? &trials[*best] : nullptr; }
};

enum class SamplerMode { random, quantile };

struct TunerOptions {
  std::size_t M = 100;
  std::size_t T_instance = 1000000;
  std::size_t min_runs = 5;
  bool prune = true;
  std::uint64_t seed = 0;
  SamplerMode sampler = SamplerMode::random;
  /// Quantile mode: random trials before the model is used.
  std::size_t startup_trials = 10;
  /// Quantile mode: fraction of complete trials counted as good.
  double gamma = 0.25;
  /// Quantile mode: candidates drawn around good trials per sample.
  std::size_t candidates = 24;

  void validate() const {
    if (M < 1) throw ConfigError("tuner: M must be >= 1");
    if (T_instance < 1) throw ConfigError("tuner: T_instance must be >= 1");
    if (!(gamma > 0.0 && gamma < 1.0)) throw ConfigError("tuner: gamma must lie in (0, 1)");
    if (candidates < 1) throw ConfigError("tuner: candidates must be >= 1");
  }
};

namespace detail {

/// Position of a value in [0, 1] on the spec's sampling scale.
inline double to_unit(const HyperparameterSpec& s, double lo, double v) {
  if (s.scale == Scale::boolean) return v;
  if (s.high == lo) return 0.0;
  if (s.scale == Scale::log) return (std::log(v) - std::log(lo)) / (std::log(s.high) - std::log(lo));
  if (s.scale == Scale::integer) return (v - lo + 0.5) / (s.high - lo + 1.0);
  return (v - lo) / (s.high - lo);
}

inline double from_unit(const HyperparameterSpec& s, double lo, double u) {
  u = std::clamp(u, 0.0, 1.0);
  switch (s.scale) {
    case Scale::boolean: return u < 0.5 ? 0.0 : 1.0;
    case Scale::log: return std::clamp(std::exp(std::log(lo) + u * (std::log(s.high) - std::log(lo))), lo, s.high);
    case Scale::integer: return std::clamp(std::floor(lo + u * (s.high - lo + 1.0)), lo, s.high);
    case Scale::linear: return std::clamp(lo + u * (s.high - lo), lo, s.high);
  }
  return lo;
}

inline HyperparameterValues sample_random(const HyperparameterSpace& space, Rng& rng) {
  HyperparameterValues v;
  for (const auto& s : space.specs()) {
    if (s.scale == Scale::boolean) {
      v[s.name] = rng.bernoulli(0.5) ? 1.0 : 0.0;
    } else {
      v[s.name] = from_unit(s, space.low_of(s, v), rng.uniform());
    }
  }
  return v;
}

inline double trial_score(const Trial& t) {
  return t.final_gert.value_or(std::numeric_limits<double>::infinity());
}

/// Log density of a Gaussian kernel mixture in unit coordinates.
inline double kde_log_density(const std::vector<std::vector<double>>& points, const std::vector<double>& x,
                              double bandwidth) {
  if (points.empty()) return 0.0;
  double acc = 0.0;
  for (const auto& p : points) {
    double d2 = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) d2 += (x[k] - p[k]) * (x[k] - p[k]);
    acc += std::exp(-0.5 * d2 / (bandwidth * bandwidth));
  }
  return std::log(acc / static_cast<double>(points.size()) + 1e-300);
}

/// Quantile-split model: candidates are drawn around the best gamma-fraction of
/// complete trials and ranked by the ratio of the good and bad kernel densities.
inline HyperparameterValues sample_quantile(const HyperparameterSpace& space, const std::vector<Trial>& history,
                                            Rng& rng, const TunerOptions& options) {
  std::vector<const Trial*> done;
  for (const auto& t : history) {
    if (t.status == TrialStatus::complete) done.push_back(&t);
  }
  if (done.size() < std::max<std::size_t>(options.startup_trials, 2)) return sample_random(space, rng);
  std::stable_sort(done.begin(), done.end(),
                   [](const Trial* a, const Trial* b) { return trial_score(*a) < trial_score(*b); });
  const auto n_good = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::ceil(options.gamma * static_cast<double>(done.size()))));

  auto unit_point = [&](const HyperparameterValues& v) {
    std::vector<double> u;
    for (const auto& s : space.specs()) u.push_back(to_unit(s, space.low_of(s, v), v.at(s.name)));
    return u;
  };
  std::vector<std::vector<double>> good;
  std::vector<std::vector<double>> bad;
  for (std::size_t i = 0; i < done.size(); ++i) (i < n_good ? good : bad).push_back(unit_point(done[i]->values));
  const double bandwidth = std::max(0.05, 1.0 / std::sqrt(static_cast<double>(good.size()) + 1.0) * 0.5);

  HyperparameterValues best;
  double best_score = -std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < options.candidates; ++c) {
    const auto& centre = good[rng.below(good.size())];
    HyperparameterValues v;
    std::size_t k = 0;
    for (const auto& s : space.specs()) {
      const double lo = space.low_of(s, v);
      if (s.scale == Scale::boolean) {
        v[s.name] = rng.bernoulli(0.8) ? centre[k] : 1.0 - centre[k];
      } else {
        v[s.name] = from_unit(s, lo, centre[k] + bandwidth * rng.normal());
      }
      ++k;
    }
    const auto u = unit_point(v);
    const double score = kde_log_density(good, u, bandwidth) - kde_log_density(bad, u, bandwidth);
    if (score > best_score) {
      best_score = score;
      best = std::move(v);
    }
  }
  return best;
}

inline double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace detail

/// Draws the hyperparameters of trial `history.size()`. Deterministic in
/// (seed, history).
inline HyperparameterValues sample(const HyperparameterSpace& space, const std::vector<Trial>& history,
                                   std::uint64_t seed, const TunerOptions& options = {}) {
  Rng rng(hash_combine(seed, history.size()));
  if (options.sampler == SamplerMode::quantile) return detail::sample_quantile(space, history, rng, options);
  return detail::sample_random(space, rng);
}

/// Median rule: prune once the trial has at least min_runs reports and its
/// latest GERT exceeds the median GERT of complete trials at the same run count.
inline bool should_prune(const Trial& trial, const std::vector<Trial>& history, std::size_t min_runs) {
  if (trial.reports.empty() || trial.reports.size() < min_runs) return false;
  const std::size_t step = trial.reports.size() - 1;
  std::vector<double> peers;
  for (const auto& t : history) {
    if (t.status == TrialStatus::complete && t.reports.size() > step) peers.push_back(t.reports[step]);
  }
  if (peers.empty()) return false;
  return trial.reports.back() > detail::median(std::move(peers));
}

/// What a study tunes: a space, how to build a launcher from sampled values,
/// and the benchmark it runs on.
struct TuneProblem {
  Algorithm algorithm = Algorithm::nelder_mead;
  HyperparameterSpace space;
  std::function<Launcher(const HyperparameterValues&)> make_launcher;
  HeightFunction height;
  DomainRect domain;
  RunConfig config;
  ScoreSchedule schedule;
  bool multistart = true;
  std::uint64_t base_seed = 0;
  std::size_t jobs = 1;
};

/// Launcher factory for the built-in algorithms.
inline std::function<Launcher(const HyperparameterValues&)> builtin_launcher_factory(Algorithm a) {
  return [a](const HyperparameterValues& v) { return make_launcher(OptimizerInstance::make(a, v)); };
}

// ---------------------------------------------------------------------------
// Study log: one row per (trial, run). The status column is "running" except
// on the final row of a trial, which reads "complete" or "pruned". Rows of a
// trial are written when the trial ends, so a log never holds partial trials.

inline std::string study_log_header(const HyperparameterSpace& space) {
  std::string h = "trial";
  for (const auto& s : space.specs()) h += "," + s.name;
  return h + ",run_index,T,returned_height,success,gert,status";
}

inline std::string study_log_rows(const Trial& trial, const HyperparameterSpace& space) {
  std::string out;
  for (std::size_t i = 0; i < trial.runs.size(); ++i) {
    const auto& r = trial.runs[i];
    out += std::to_string(trial.number);
    for (const auto& s : space.specs()) out += "," + format_double(trial.values.at(s.name));
    const bool last = i + 1 == trial.runs.size();
    out += "," + std::to_string(r.run_index) + "," + std::to_string(r.T) + "," + format_double(r.returned_height) +
           "," + (r.success ? "1" : "0") + "," + format_double(trial.reports[i]) + "," +
           std::string(trial_status_name(last ? trial.status : TrialStatus::running)) + "\n";
  }
  return out;
}

/// Restores the finished trials of a log. A trailing trial without a final
/// row is dropped so that it is rerun.
inline std::vector<Trial> parse_study_log(std::string_view text, const HyperparameterSpace& space,
                                          const std::string& source = "study log") {
  const CsvTable t = parse_csv(text, source);
  if (t.header.empty()) return {};
  if (t.header != split(study_log_header(space), ',')) {
    throw ParseError(source, 1, "study log columns do not match the hyperparameter space");
  }
  const std::size_t np = space.specs().size();
  std::vector<Trial> trials;
  std::optional<Trial> current;
  for (const auto& row : t.rows) {
    const auto number = static_cast<std::size_t>(parse_double(row[0]));
    if (!current) {
      if (number != trials.size()) throw ParseError(source + ": trial numbers are not consecutive");
      current.emplace();
      current->number = number;
      for (std::size_t k = 0; k < np; ++k) current->values[space.specs()[k].name] = parse_double(row[1 + k]);
    } else if (number != current->number) {
      throw ParseError(source + ": trial " + std::to_string(current->number) + " has no final row");
    }
    RunResult r;
    r.run_index = static_cast<std::size_t>(parse_double(row[1 + np]));
    r.T = static_cast<std::size_t>(parse_double(row[2 + np]));
    r.returned_height = parse_double(row[3 + np]);
    r.success = row[4 + np] == "1";
    current->runs.push_back(r);
    current->reports.push_back(parse_double(row[5 + np]));
    const std::string& status = row[6 + np];
    if (status == "running") continue;
    if (status == "complete") {
      current->status = TrialStatus::complete;
      current->final_gert = current->reports.back();
    } else if (status == "pruned") {
      current->status = TrialStatus::pruned;
    } else {
      throw ParseError(source + ": unknown trial status '" + status + "'");
    }
    trials.push_back(std::move(*current));
    current.reset();
  }
  return trials;
}

namespace detail {

inline void update_best(Study& study, std::size_t k) {
  const Trial& t = study.trials[k];
  if (t.status != TrialStatus::complete) return;
  if (!study.best || *t.final_gert < *study.trials[*study.best].final_gert) study.best = k;
}

}  // namespace detail

/// Runs trials until M exist. `resumed` trials (from a log) are kept as-is.
/// When `log_path` is set, the whole log is rewritten atomically after every
/// trial.
inline Study tune(const TuneProblem& problem, const TunerOptions& options, std::vector<Trial> resumed = {},
                  const std::filesystem::path& log_path = {}) {
  options.validate();
  problem.config.validate();
  problem.schedule.validate();
  Study study;
  std::string log = study_log_header(problem.space) + "\n";
  for (auto& t : resumed) {
    if (study.trials.size() >= options.M) break;
    const auto expected = sample(problem.space, study.trials, options.seed, options);
    if (expected != t.values) {
      throw ConfigError("study log trial " + std::to_string(t.number) +
                        " was sampled with a different seed, sampler or space");
    }
    log += study_log_rows(t, problem.space);
    study.trials.push_back(std::move(t));
    detail::update_best(study, study.trials.size() - 1);
  }

  while (study.trials.size() < options.M) {
    Trial trial;
    trial.number = study.trials.size();
    trial.values = sample(problem.space, study.trials, options.seed, options);
    const Launcher launcher = problem.make_launcher(trial.values);

    InstanceRunOptions run_options;
    run_options.multistart = problem.multistart;
    run_options.base_seed = problem.base_seed;
    run_options.jobs = problem.jobs;
    run_options.on_run = [&](const RunOutcome& o) {
      trial.runs.push_back(o.result);
      trial.reports.push_back(gert(trial.runs, problem.schedule));
      // A trial that has spent its budget is complete, never pruned.
      if (options.prune && trial.spent() < options.T_instance &&
          should_prune(trial, study.trials, options.min_runs)) {
        trial.status = TrialStatus::pruned;
        return false;
      }
      return true;
    };
    run_instance(launcher, problem.height, problem.domain, problem.config, Budget::evals(options.T_instance),
                 run_options);
    if (trial.status != TrialStatus::pruned) {
      trial.status = TrialStatus::complete;
      trial.final_gert = trial.reports.back();
    }
    log += study_log_rows(trial, problem.space);
    study.trials.push_back(std::move(trial));
    detail::update_best(study, study.trials.size() - 1);
    if (!log_path.empty()) write_file_atomic(log_path, log);
  }
  if (!log_path.empty()) write_file_atomic(log_path, log);
  return study;
}

}  // namespace terrabench
