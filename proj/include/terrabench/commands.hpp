#pragma once

// Pipeline commands shared by the command-line tool and the tests. Each
// command writes its artifacts atomically and prints a machine-readable
// summary ("key value" lines) to `out`.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "terrabench/asc_io.hpp"
#include "terrabench/bands.hpp"
#include "terrabench/config.hpp"
#include "terrabench/errors.hpp"
#include "terrabench/harness.hpp"
#include "terrabench/measures.hpp"
#include "terrabench/optima.hpp"
#include "terrabench/optimizers.hpp"
#include "terrabench/reports.hpp"
#include "terrabench/terrain.hpp"
#include "terrabench/tuner.hpp"

namespace terrabench {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitData = 3;

/// Reference figures for the full Great Britain dataset.
inline constexpr std::uint64_t kReferenceOptimaCount = 957174;
inline constexpr double kReferenceTopBasinProportion = 2.41e-6;

/// Runs `body`, mapping exceptions to exit codes and messages on `err`.
inline int guarded(const std::function<void()>& body, std::ostream& err) {
  try {
    body();
    return kExitOk;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  }
}

// ---------------------------------------------------------------------------
// preprocess

struct PreprocessSummary {
  std::size_t tiles = 0;
  std::size_t ncols = 0;
  std::size_t nrows = 0;
  std::size_t sea_points = 0;
  double min_height = 0.0;
  double max_height = 0.0;
};

/// Assembles every *.asc tile of `asc_dir`, applies the optional patch, masks
/// and slopes the sea.
inline ElevationGrid preprocess_tiles(const std::filesystem::path& asc_dir, const std::filesystem::path& patch,
                                      PreprocessSummary* summary = nullptr) {
  if (!std::filesystem::is_directory(asc_dir)) {
    throw ConfigError("tile directory " + asc_dir.string() + " does not exist");
  }
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(asc_dir)) {
    auto ext = entry.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    if (entry.is_regular_file() && ext == ".asc") files.push_back(entry.path());
  }
  if (files.empty()) throw DataError("no .asc tiles in " + asc_dir.string());
  std::sort(files.begin(), files.end());
  std::vector<ElevationGrid> tiles;
  tiles.reserve(files.size());
  for (const auto& f : files) tiles.push_back(load_asc_tile(f));

  ElevationGrid grid = assemble_grid(tiles, bounding_extent(tiles));
  if (!patch.empty()) {
    if (!std::filesystem::exists(patch)) throw ConfigError("patch file " + patch.string() + " does not exist");
    apply_patch(grid, parse_patch(read_file(patch), patch.string()));
  }
  const SeaMask mask = build_sea_mask(grid);
  grid = apply_sea_slope(grid, mask);
  if (summary) {
    summary->tiles = tiles.size();
    summary->ncols = grid.ncols();
    summary->nrows = grid.nrows();
    summary->sea_points = mask.sea_count();
    const auto [lo, hi] = std::minmax_element(grid.heights().begin(), grid.heights().end());
    summary->min_height = *lo;
    summary->max_height = *hi;
  }
  return grid;
}

inline PreprocessSummary cmd_preprocess(const std::filesystem::path& asc_dir, const std::filesystem::path& patch,
                                        const std::filesystem::path& out_cache, std::ostream& out) {
  PreprocessSummary s;
  const ElevationGrid grid = preprocess_tiles(asc_dir, patch, &s);
  write_cache(grid, out_cache);
  out << "tiles " << s.tiles << "\nncols " << s.ncols << "\nnrows " << s.nrows << "\nsea_points " << s.sea_points
      << "\nmin_height " << format_double(s.min_height) << "\nmax_height " << format_double(s.max_height)
      << "\ncache " << out_cache.string() << "\n";
  return s;
}

// ---------------------------------------------------------------------------
// optima

struct OptimaSummary {
  std::size_t optima = 0;
  double top_band_proportion = 0.0;
  std::vector<BandStatistic> bands;
};

/// Writes optima.csv and band_stats.csv. With `gate`, compares against the
/// full-dataset reference figures (informational only).
inline OptimaSummary cmd_optima(const ElevationGrid& grid, const ScoreSchedule& bands,
                                const std::filesystem::path& out_dir, bool gate, std::ostream& out) {
  if (grid.has_nodata()) throw DataError("grid has missing heights; preprocess it first");
  const NsaGraph nsa = assign_nsa(grid);
  const BasinLabeling labeling = label_basins(grid, nsa);
  OptimaSummary s;
  s.optima = labeling.optima.size();
  s.bands = band_statistics(labeling, bands);
  s.top_band_proportion = s.bands.back().basin_proportion;
  write_file_atomic(out_dir / "optima.csv", optima_csv(grid, labeling));
  write_file_atomic(out_dir / "band_stats.csv", band_statistics_csv(s.bands));
  out << "optima " << s.optima << "\ntop_band_proportion " << format_double(s.top_band_proportion) << "\n";
  if (gate) {
    const double count_dev = (static_cast<double>(s.optima) - kReferenceOptimaCount) / kReferenceOptimaCount;
    const double prop_dev = (s.top_band_proportion - kReferenceTopBasinProportion) / kReferenceTopBasinProportion;
    out << "reference_optima " << kReferenceOptimaCount << "\noptima_relative_deviation "
        << format_double(count_dev) << "\nreference_top_band_proportion "
        << format_double(kReferenceTopBasinProportion) << "\ntop_band_relative_deviation "
        << format_double(prop_dev) << "\n";
  }
  return s;
}

// ---------------------------------------------------------------------------
// run

inline InstanceRunOptions run_options(const BenchConfig& c) {
  InstanceRunOptions o;
  o.multistart = c.multistart;
  o.base_seed = c.seed;
  o.jobs = c.jobs;
  return o;
}

/// Runs the configured instance and writes traces/, results.csv,
/// measures.csv, measures.json, instance.toml and config.toml.
inline MeasureReport cmd_run(const BenchConfig& c, const std::string& config_text, const std::filesystem::path& out_dir,
                             std::ostream& out) {
  if (!c.instance) throw ConfigError("[algorithm] is required for run");
  const ElevationGrid grid = load_grid(c.data);
  if (grid.has_nodata()) throw DataError("grid has missing heights; preprocess it first");
  const auto outcomes = run_instance(make_launcher(*c.instance), terrain_height(grid), grid.extent(), c.run, c.budget,
                                     run_options(c));
  const auto results = results_of(outcomes);
  const MeasureReport m = compute_measures(results, c.bands, c.run.T_max);

  std::filesystem::create_directories(out_dir);
  write_traces(outcomes, out_dir / "traces");
  write_file_atomic(out_dir / "results.csv", results_csv(results));
  write_file_atomic(out_dir / "measures.csv", measures_csv_header() + "\n" + measures_csv_row(m) + "\n");
  write_file_atomic(out_dir / "measures.json", measures_json(m) + "\n");
  write_file_atomic(out_dir / "instance.toml", instance_toml(*c.instance, c.space));
  write_file_atomic(out_dir / "config.toml", config_text);
  out << "instance " << c.instance->describe() << "\n" << measures_csv_header() << "\n" << measures_csv_row(m) << "\n";
  return m;
}

// ---------------------------------------------------------------------------
// tune

inline TuneProblem tune_problem(const BenchConfig& c, const ElevationGrid& grid) {
  TuneProblem p;
  p.algorithm = c.algorithm;
  p.space = c.space;
  p.make_launcher = [a = c.algorithm, space = c.space](const HyperparameterValues& v) {
    return make_launcher(OptimizerInstance::make(a, v, space));
  };
  p.height = terrain_height(grid);
  p.domain = grid.extent();
  p.config = c.run;
  p.schedule = c.bands;
  p.multistart = c.multistart;
  p.base_seed = c.seed;
  p.jobs = c.jobs;
  return p;
}

/// Runs a study, writing study_log.csv after each trial and best_instance.toml
/// at the end. With `resume`, finished trials of an existing log are kept.
inline Study cmd_tune(const BenchConfig& c, const std::filesystem::path& out_dir, bool resume, std::ostream& out) {
  const ElevationGrid grid = load_grid(c.data);
  if (grid.has_nodata()) throw DataError("grid has missing heights; preprocess it first");
  const TuneProblem problem = tune_problem(c, grid);
  const auto log_path = out_dir / "study_log.csv";
  std::vector<Trial> resumed;
  if (resume && std::filesystem::exists(log_path)) {
    resumed = parse_study_log(read_file(log_path), problem.space, log_path.string());
  }
  const std::size_t kept = resumed.size();
  std::filesystem::create_directories(out_dir);
  const Study study = tune(problem, c.tune, std::move(resumed), log_path);

  std::size_t pruned = 0;
  for (const auto& t : study.trials) pruned += t.status == TrialStatus::pruned ? 1 : 0;
  out << "trials " << study.trials.size() << "\nresumed " << kept << "\npruned " << pruned << "\n";
  if (const Trial* best = study.best_trial()) {
    const auto inst = OptimizerInstance::make(c.algorithm, best->values, problem.space);
    write_file_atomic(out_dir / "best_instance.toml", instance_toml(inst, problem.space));
    out << "best_trial " << best->number << "\nbest_gert " << format_double(*best->final_gert) << "\nbest "
        << inst.describe() << "\n";
  } else {
    out << "best_trial none\n";
  }
  return study;
}

// ---------------------------------------------------------------------------
// report

/// Lowest target of the ERT curve when none is configured: the bottom of the
/// lowest scoring band below f_target.
inline double default_ert_low(const ScoreSchedule& bands, double f_target) {
  for (const auto& b : bands.bands()) {
    if (b.score > 0.0 && b.low < f_target) return b.low;
  }
  return f_target - 100.0;
}

/// Reads traces/ and config.toml of a run directory and writes the plot CSVs
/// and SVGs into `out_dir`. Returns the written file names.
inline std::vector<std::string> cmd_report(const std::filesystem::path& results_dir,
                                           const std::filesystem::path& out_dir, std::ostream& out) {
  if (!std::filesystem::is_directory(results_dir)) {
    throw ConfigError("results directory " + results_dir.string() + " does not exist");
  }
  const auto config_path = results_dir / "config.toml";
  if (!std::filesystem::exists(config_path)) throw DataError(config_path.string() + " is missing");
  const BenchConfig c = parse_config(read_file(config_path), config_path.string());
  const auto traces = read_traces(results_dir / "traces");
  if (traces.empty()) throw DataError("no traces in " + (results_dir / "traces").string());

  std::vector<std::pair<std::string, std::string>> files;
  const ConvergenceMatrix m = convergence_matrix(traces, c.run.T_max);
  const auto summary = aggregate_summary(m);
  const auto counts = height_band_counts(m, c.bands);
  files.emplace_back("convergence.csv", convergence_csv(m, traces));
  files.emplace_back("summary.csv", summary_csv(summary));
  files.emplace_back("bands.csv", bands_csv(counts, c.bands));
  files.emplace_back("summary.svg", summary_svg(summary, "Best height found", "height (m)"));
  files.emplace_back("bands.svg", bands_svg(counts, c.bands, m.rows));

  const double low = c.ert_low.value_or(default_ert_low(c.bands, c.run.f_target));
  const auto targets = target_grid(std::min(low, c.run.f_target), c.run.f_target, c.ert_targets);
  const auto curve = ert_curve(traces, c.run, targets);
  files.emplace_back("ert_curve.csv", ert_curve_csv(curve));
  files.emplace_back("ert_curve.svg", ert_curve_svg(curve));

  if (c.report_target) {
    const ConvergenceMatrix d = distance_matrix(traces, *c.report_target, c.run.T_max);
    const auto ds = aggregate_summary(d);
    files.emplace_back("distance.csv", convergence_csv(d, traces, "best_distance"));
    files.emplace_back("distance_summary.csv", summary_csv(ds));
    files.emplace_back("distance.svg", summary_svg(ds, "Closest distance to target", "distance (m)"));
  }

  std::vector<std::string> names;
  for (const auto& [name, content] : files) {
    write_file_atomic(out_dir / name, content);
    names.push_back(name);
  }
  out << "runs " << m.rows << "\nsuccess_area " << padded_success_area(m, c.run.f_target) << "\nfiles";
  for (const auto& n : names) out << " " << n;
  out << "\n";
  return names;
}

// ---------------------------------------------------------------------------
// synth

/// Splits a synthetic terrain into `tiles_x` x `tiles_y` adjacent ASC tiles.
inline std::vector<std::filesystem::path> cmd_synth(const SyntheticSpec& spec, std::size_t tiles_x,
                                                    std::size_t tiles_y, const std::filesystem::path& out_dir,
                                                    std::ostream& out) {
  if (tiles_x < 1 || tiles_y < 1) throw ConfigError("tile counts must be >= 1");
  if (spec.ncols % tiles_x != 0 || spec.nrows % tiles_y != 0) {
    throw ConfigError("grid size must be divisible by the tile counts");
  }
  const ElevationGrid grid = synth_terrain(spec.seed, spec.nrows, spec.ncols, spec.ruggedness, spec.cell_size);
  const std::size_t tc = spec.ncols / tiles_x;
  const std::size_t tr = spec.nrows / tiles_y;
  if (tc < 2 || tr < 2) throw ConfigError("tiles need at least 2x2 points");
  std::vector<std::filesystem::path> paths;
  for (std::size_t ty = 0; ty < tiles_y; ++ty) {
    for (std::size_t tx = 0; tx < tiles_x; ++tx) {
      std::vector<float> h(tc * tr);
      for (std::size_t r = 0; r < tr; ++r) {
        for (std::size_t col = 0; col < tc; ++col) h[r * tc + col] = grid.at(ty * tr + r, tx * tc + col);
      }
      // Tile row 0 of the southernmost tile sits tiles_y - 1 tiles above the grid origin.
      const double oe = static_cast<double>(tx * tc) * spec.cell_size;
      const double on = static_cast<double>((tiles_y - 1 - ty) * tr) * spec.cell_size;
      const ElevationGrid tile(tc, tr, spec.cell_size, oe, on, std::move(h));
      char name[64];
      std::snprintf(name, sizeof name, "tile_%02zu_%02zu.asc", ty, tx);
      const auto path = out_dir / name;
      write_file_atomic(path, format_asc(tile));
      paths.push_back(path);
    }
  }
  out << "tiles " << paths.size() << "\n";
  return paths;
}

}  // namespace terrabench
