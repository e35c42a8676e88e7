#pragma once

// Discrete local optima and basins of attraction of an elevation grid.
//
// Every grid point is linked to its neighbour of steepest ascent (NSA). The
// links form a forest whose roots are the local optima; the basin of an
// optimum is the set of points whose NSA walk ends there.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "terrabench/bands.hpp"
#include "terrabench/errors.hpp"
#include "terrabench/grid.hpp"
#include "terrabench/io_util.hpp"
#include "terrabench/terrain.hpp"

namespace terrabench {

/// Neighbour of steepest ascent per point, stored as a canonical direction
/// (0 = bottom, 1 = bottom-right, ..., 7 = bottom-left) or -1 for none.
class NsaGraph {
 public:
  static constexpr std::int8_t kNone = -1;

  NsaGraph() = default;
  NsaGraph(std::size_t ncols, std::size_t nrows)
      : ncols_(ncols), nrows_(nrows), direction_(ncols * nrows, kNone) {}

  std::size_t ncols() const noexcept { return ncols_; }
  std::size_t nrows() const noexcept { return nrows_; }
  std::size_t size() const noexcept { return direction_.size(); }

  std::int8_t direction(std::size_t p) const noexcept { return direction_[p]; }
  void set_direction(std::size_t p, std::int8_t d) noexcept { direction_[p] = d; }
  bool is_sink(std::size_t p) const noexcept { return direction_[p] == kNone; }

  std::optional<std::size_t> successor(std::size_t p) const noexcept {
    const std::int8_t d = direction_[p];
    if (d == kNone) return std::nullopt;
    const auto& off = detail::kNeighbourOffsets[static_cast<std::size_t>(d)];
    const auto r = static_cast<std::int64_t>(p / ncols_) + off[0];
    const auto c = static_cast<std::int64_t>(p % ncols_) + off[1];
    return static_cast<std::size_t>(r) * ncols_ + static_cast<std::size_t>(c);
  }

  friend bool operator==(const NsaGraph&, const NsaGraph&) = default;

 private:
  std::size_t ncols_ = 0;
  std::size_t nrows_ = 0;
  std::vector<std::int8_t> direction_;
};

/// Height gradient from p to q in grid-index units (Euclidean distance).
inline double gradient(const ElevationGrid& grid, GridPoint p, GridPoint q) {
  if (p == q) throw std::invalid_argument("gradient needs two distinct points");
  const double dr = static_cast<double>(p.row) - static_cast<double>(q.row);
  const double dc = static_cast<double>(p.col) - static_cast<double>(q.col);
  return (static_cast<double>(grid.at(q)) - static_cast<double>(grid.at(p))) / std::sqrt(dr * dr + dc * dc);
}

namespace detail {

inline double index_gradient(const ElevationGrid& grid, std::size_t p, std::size_t q) {
  return gradient(grid, grid.point(p), grid.point(q));
}

}  // namespace detail

/// Assigns the neighbour of steepest ascent to every point that has one.
///
/// 1. A point with a strictly higher neighbour takes the neighbour of maximal
///    gradient (first in canonical order on ties).
/// 2. Plateau points are resolved in rounds. In each round, an unassigned point
///    looks at its equal-height neighbours that already had an NSA at the start
///    of the round; each such neighbour leads, through its NSA chain, to a first
///    strictly higher point (its exit). The point adopts the neighbour whose exit
///    gives the largest gradient from the point itself (canonical order on ties).
///    Rounds stop when nothing changes.
/// 3. Remaining points form flat tops. Breadth-first searches, rooted at the
///    first unvisited point in row-major order, link every equal-height
///    unassigned neighbour to the point being expanded.
/// Points still without an NSA are the local optima.
inline NsaGraph assign_nsa(const ElevationGrid& grid) {
  if (grid.has_nodata()) throw DataError("NSA assignment needs a grid without nodata");
  const std::size_t nc = grid.ncols();
  const std::size_t nr = grid.nrows();
  const std::size_t n = grid.size();
  NsaGraph nsa(nc, nr);
  constexpr std::size_t kNoExit = std::numeric_limits<std::size_t>::max();
  std::vector<std::size_t> exit_point(n, kNoExit);

  // Step 1
  for (std::size_t p = 0; p < n; ++p) {
    const float hp = grid[p];
    double best = 0.0;
    int best_dir = -1;
    std::size_t best_q = 0;
    detail::for_each_neighbour(nc, nr, p, [&](std::size_t q, int d) {
      if (grid[q] > hp) {
        const double g = detail::index_gradient(grid, p, q);
        if (best_dir < 0 || g > best) {
          best = g;
          best_dir = d;
          best_q = q;
        }
      }
    });
    if (best_dir >= 0) {
      nsa.set_direction(p, static_cast<std::int8_t>(best_dir));
      exit_point[p] = best_q;
    }
  }

  // Step 2: candidates for the next round are unassigned equal-height
  // neighbours of points assigned in the previous round.
  auto collect_candidates = [&](const std::vector<std::size_t>& assigned) {
    std::vector<std::size_t> cand;
    std::vector<std::size_t> seen;
    for (std::size_t p : assigned) {
      detail::for_each_neighbour(nc, nr, p, [&](std::size_t q, int) {
        if (nsa.is_sink(q) && grid[q] == grid[p]) cand.push_back(q);
      });
    }
    std::sort(cand.begin(), cand.end());
    cand.erase(std::unique(cand.begin(), cand.end()), cand.end());
    return cand;
  };

  std::vector<std::size_t> assigned_last;
  for (std::size_t p = 0; p < n; ++p) {
    if (!nsa.is_sink(p)) assigned_last.push_back(p);
  }
  std::vector<std::size_t> candidates = collect_candidates(assigned_last);
  struct Pending {
    std::size_t point;
    std::int8_t dir;
    std::size_t exit;
  };
  std::vector<Pending> pending;
  while (!candidates.empty()) {
    pending.clear();
    for (std::size_t p : candidates) {
      double best = 0.0;
      int best_dir = -1;
      std::size_t best_exit = kNoExit;
      detail::for_each_neighbour(nc, nr, p, [&](std::size_t q, int d) {
        if (grid[q] != grid[p] || nsa.is_sink(q)) return;
        const double g = detail::index_gradient(grid, p, exit_point[q]);
        if (best_dir < 0 || g > best) {
          best = g;
          best_dir = d;
          best_exit = exit_point[q];
        }
      });
      if (best_dir >= 0) pending.push_back({p, static_cast<std::int8_t>(best_dir), best_exit});
    }
    assigned_last.clear();
    for (const auto& a : pending) {
      nsa.set_direction(a.point, a.dir);
      exit_point[a.point] = a.exit;
      assigned_last.push_back(a.point);
    }
    candidates = collect_candidates(assigned_last);
  }

  // Step 3
  std::vector<std::uint8_t> is_root(n, 0);
  std::deque<std::size_t> queue;
  for (std::size_t root = 0; root < n; ++root) {
    if (!nsa.is_sink(root) || is_root[root]) continue;
    is_root[root] = 1;
    queue.push_back(root);
    while (!queue.empty()) {
      const std::size_t p = queue.front();
      queue.pop_front();
      detail::for_each_neighbour(nc, nr, p, [&](std::size_t q, int d) {
        if (grid[q] != grid[p] || !nsa.is_sink(q) || is_root[q]) return;
        nsa.set_direction(q, static_cast<std::int8_t>((d + 4) % 8));
        queue.push_back(q);
      });
    }
  }
  return nsa;
}

struct LocalOptimum {
  std::size_t index = 0;
  GridPoint point;
  double height = 0.0;

  friend bool operator==(const LocalOptimum&, const LocalOptimum&) = default;
};

/// Sinks of the NSA graph, by descending height then row-major position.
inline std::vector<LocalOptimum> find_local_optima(const ElevationGrid& grid, const NsaGraph& nsa) {
  std::vector<LocalOptimum> optima;
  for (std::size_t p = 0; p < nsa.size(); ++p) {
    if (nsa.is_sink(p)) optima.push_back({p, grid.point(p), static_cast<double>(grid[p])});
  }
  std::stable_sort(optima.begin(), optima.end(),
                   [](const LocalOptimum& a, const LocalOptimum& b) { return a.height > b.height; });
  return optima;
}

/// Basin membership of every point. `basin_id[p]` indexes `optima`.
struct BasinLabeling {
  std::vector<std::uint32_t> basin_id;
  std::vector<LocalOptimum> optima;
  std::vector<std::uint64_t> areas;  // per optimum, number of points in its basin
};

/// Labels each point with the basin it drains into (uphill). Walks the NSA
/// chain from each unlabelled point until it meets a labelled one, then labels
/// the whole recorded path.
inline BasinLabeling label_basins(const ElevationGrid& grid, const NsaGraph& nsa) {
  constexpr std::uint32_t kUnlabelled = std::numeric_limits<std::uint32_t>::max();
  BasinLabeling out;
  out.optima = find_local_optima(grid, nsa);
  if (out.optima.size() >= kUnlabelled) throw DataError("too many local optima");
  out.basin_id.assign(nsa.size(), kUnlabelled);
  out.areas.assign(out.optima.size(), 0);
  for (std::size_t i = 0; i < out.optima.size(); ++i) {
    out.basin_id[out.optima[i].index] = static_cast<std::uint32_t>(i);
  }
  std::vector<std::size_t> path;
  for (std::size_t start = 0; start < nsa.size(); ++start) {
    if (out.basin_id[start] != kUnlabelled) continue;
    path.clear();
    std::size_t p = start;
    while (out.basin_id[p] == kUnlabelled) {
      path.push_back(p);
      p = *nsa.successor(p);
      if (path.size() > nsa.size()) throw DataError("cycle in NSA graph");
    }
    const std::uint32_t id = out.basin_id[p];
    for (std::size_t q : path) out.basin_id[q] = id;
  }
  for (std::uint32_t id : out.basin_id) ++out.areas[id];
  return out;
}

struct BandStatistic {
  HeightBand band;
  std::uint64_t optima_count = 0;
  std::uint64_t basin_size = 0;
  double basin_proportion = 0.0;
};

/// Basin size and proportion per band: the area of all basins whose optimum lies in the band.
inline std::vector<BandStatistic> band_statistics(const BasinLabeling& labeling, const ScoreSchedule& bands) {
  std::vector<BandStatistic> stats;
  for (const auto& b : bands.bands()) stats.push_back({b, 0, 0, 0.0});
  const auto total = static_cast<double>(labeling.basin_id.size());
  for (std::size_t i = 0; i < labeling.optima.size(); ++i) {
    const double h = labeling.optima[i].height;
    const auto band = bands.band_index(h);
    if (!band) {
      throw DataError("local optimum at height " + format_double(h) + " lies outside every band");
    }
    ++stats[*band].optima_count;
    stats[*band].basin_size += labeling.areas[i];
  }
  for (auto& s : stats) s.basin_proportion = static_cast<double>(s.basin_size) / total;
  return stats;
}

/// optima.csv: one row per optimum with its basin area.
inline std::string optima_csv(const ElevationGrid& grid, const BasinLabeling& labeling) {
  std::string out = "point_easting,point_northing,height,basin_area\n";
  for (std::size_t i = 0; i < labeling.optima.size(); ++i) {
    const auto& o = labeling.optima[i];
    out += format_double(grid.easting(o.point)) + "," + format_double(grid.northing(o.point)) + "," +
           format_double(o.height) + "," + std::to_string(labeling.areas[i]) + "\n";
  }
  return out;
}

/// band_stats.csv: one row per band.
inline std::string band_statistics_csv(const std::vector<BandStatistic>& stats) {
  std::string out = "band_low,band_high,label,optima,basin_size,basin_proportion\n";
  for (const auto& s : stats) {
    out += format_double(s.band.low) + "," + format_double(s.band.high) + "," + s.band.label + "," +
           std::to_string(s.optima_count) + "," + std::to_string(s.basin_size) + "," +
           format_double(s.basin_proportion) + "\n";
  }
  return out;
}

}  // namespace terrabench
