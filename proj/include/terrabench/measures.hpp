#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>

#include "terrabench/bands.hpp"
#include "terrabench/harness.hpp"
#include "terrabench/io_util.hpp"

namespace terrabench {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

namespace detail {

inline void require_runs(std::span<const RunResult> results) {
  if (results.empty()) throw std::invalid_argument("performance measures need at least one run");
}

inline std::size_t successes(std::span<const RunResult> results) {
  std::size_t n = 0;
  for (const auto& r : results) n += r.success ? 1 : 0;
  return n;
}

inline double total_T(std::span<const RunResult> results) {
  double t = 0.0;
  for (const auto& r : results) t += static_cast<double>(r.T);
  return t;
}

inline double successful_T(std::span<const RunResult> results) {
  double t = 0.0;
  for (const auto& r : results) t += r.success ? static_cast<double>(r.T) : 0.0;
  return t;
}

inline void require_full_failures(std::span<const RunResult> results, std::size_t T_max, const char* what) {
  for (const auto& r : results) {
    if (!r.success && r.T != T_max) {
      throw std::invalid_argument(std::string(what) + " needs every unsuccessful run to cost T_max");
    }
  }
}

}  // namespace detail

/// N_s / N.
inline double success_rate(std::span<const RunResult> results) {
  detail::require_runs(results);
  return static_cast<double>(detail::successes(results)) / static_cast<double>(results.size());
}

/// Mean T of successful runs; NaN when there are none.
inline double mean_successful_T(std::span<const RunResult> results) {
  const std::size_t ns = detail::successes(results);
  return ns == 0 ? std::numeric_limits<double>::quiet_NaN() : detail::successful_T(results) / static_cast<double>(ns);
}

/// Sum of T over all runs divided by N_s; infinite without successes.
inline double ert(std::span<const RunResult> results) {
  detail::require_runs(results);
  const std::size_t ns = detail::successes(results);
  return ns == 0 ? kInf : detail::total_T(results) / static_cast<double>(ns);
}

/// T_s + T_max (1 - p_s) / p_s. Valid only when failures cost T_max.
inline double ert_alternative(std::span<const RunResult> results, std::size_t T_max) {
  detail::require_runs(results);
  detail::require_full_failures(results, T_max, "ert_alternative");
  const double ps = success_rate(results);
  if (ps == 0.0) return kInf;
  return mean_successful_T(results) + static_cast<double>(T_max) * (1.0 - ps) / ps;
}

/// Sum of T divided by the sum of band scores of the returned heights.
inline double gert(std::span<const RunResult> results, const ScoreSchedule& schedule) {
  detail::require_runs(results);
  double score = 0.0;
  for (const auto& r : results) score += schedule.score(r.returned_height);
  return score == 0.0 ? kInf : detail::total_T(results) / score;
}

inline double total_score(std::span<const RunResult> results, const ScoreSchedule& schedule) {
  double score = 0.0;
  for (const auto& r : results) score += schedule.score(r.returned_height);
  return score;
}

inline double avg_returned_height(std::span<const RunResult> results) {
  detail::require_runs(results);
  double s = 0.0;
  for (const auto& r : results) s += r.returned_height;
  return s / static_cast<double>(results.size());
}

/// Success performance T_s / p_s.
inline double sp(std::span<const RunResult> results) {
  const double ps = success_rate(results);
  return ps == 0.0 ? kInf : mean_successful_T(results) / ps;
}

/// Penalised average runtime with penalty factor k.
inline double par(std::span<const RunResult> results, double k, std::size_t T_max) {
  detail::require_runs(results);
  const auto nus = static_cast<double>(results.size() - detail::successes(results));
  return (k * nus * static_cast<double>(T_max) + detail::successful_T(results)) / static_cast<double>(results.size());
}

/// Dominated hypervolume p_s (T_max - T_s); 0 without successes.
inline double hv(std::span<const RunResult> results, std::size_t T_max) {
  const double ps = success_rate(results);
  return ps == 0.0 ? 0.0 : ps * (static_cast<double>(T_max) - mean_successful_T(results));
}

struct MeasureReport {
  std::size_t N = 0;
  std::size_t N_s = 0;
  double p_s = 0.0;
  double T_s = 0.0;  // NaN without successes
  double ERT = kInf;
  double GERT = kInf;
  double avg_returned_height = 0.0;
  double SP = kInf;
  double PAR2 = 0.0;
  double PAR10 = 0.0;
  double HV = 0.0;
};

inline MeasureReport compute_measures(std::span<const RunResult> results, const ScoreSchedule& schedule,
                                      std::size_t T_max) {
  MeasureReport m;
  m.N = results.size();
  m.N_s = detail::successes(results);
  m.p_s = success_rate(results);
  m.T_s = mean_successful_T(results);
  m.ERT = ert(results);
  m.GERT = gert(results, schedule);
  m.avg_returned_height = avg_returned_height(results);
  m.SP = sp(results);
  m.PAR2 = par(results, 2.0, T_max);
  m.PAR10 = par(results, 10.0, T_max);
  m.HV = hv(results, T_max);
  return m;
}

inline std::string measures_csv_header() { return "N,N_s,p_s,T_s,ERT,GERT,avg_returned_height,SP,PAR2,PAR10,HV"; }

inline std::string measures_csv_row(const MeasureReport& m) {
  return std::to_string(m.N) + "," + std::to_string(m.N_s) + "," + format_double(m.p_s) + "," + format_double(m.T_s) +
         "," + format_double(m.ERT) + "," + format_double(m.GERT) + "," + format_double(m.avg_returned_height) + "," +
         format_double(m.SP) + "," + format_double(m.PAR2) + "," + format_double(m.PAR10) + "," + format_double(m.HV);
}

/// JSON object; non-finite values are written as strings ("inf", "nan").
inline std::string measures_json(const MeasureReport& m) {
  auto num = [](double v) { return std::isfinite(v) ? format_double(v) : "\"" + format_double(v) + "\""; };
  return "{\"N\": " + std::to_string(m.N) + ", \"N_s\": " + std::to_string(m.N_s) + ", \"p_s\": " + num(m.p_s) +
         ", \"T_s\": " + num(m.T_s) + ", \"ERT\": " + num(m.ERT) + ", \"GERT\": " + num(m.GERT) +
         ", \"avg_returned_height\": " + num(m.avg_returned_height) + ", \"SP\": " + num(m.SP) +
         ", \"PAR2\": " + num(m.PAR2) + ", \"PAR10\": " + num(m.PAR10) + ", \"HV\": " + num(m.HV) + "}";
}

}  // namespace terrabench
