#pragma once

// Terrain preparation and the continuous height function:
// tile assembly, sea masking, sea-bed sloping, bilinear interpolation,
// synthetic test terrains and the 4-D product objective.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include "terrabench/errors.hpp"
#include "terrabench/grid.hpp"
#include "terrabench/rng.hpp"

namespace terrabench {

// ---------------------------------------------------------------------------
// Tile assembly

/// Placement of an assembled grid: south-west corner plus covered area.
/// The assembled grid has width/cell_size columns and height/cell_size rows.
struct GridExtent {
  double origin_easting = 0.0;
  double origin_northing = 0.0;
  DomainRect area;
};

/// Smallest extent covering all tiles.
inline GridExtent bounding_extent(std::span<const ElevationGrid> tiles) {
  if (tiles.empty()) throw DataError("no tiles to assemble");
  double e0 = std::numeric_limits<double>::infinity();
  double n0 = e0;
  double e1 = -e0;
  double n1 = -e0;
  for (const auto& t : tiles) {
    e0 = std::min(e0, t.origin_easting());
    n0 = std::min(n0, t.origin_northing());
    e1 = std::max(e1, t.origin_easting() + static_cast<double>(t.ncols()) * t.cell_size());
    n1 = std::max(n1, t.origin_northing() + static_cast<double>(t.nrows()) * t.cell_size());
  }
  return {e0, n0, {e1 - e0, n1 - n0}};
}

/// Mosaics tiles into one grid covering `extent`. Uncovered points are nodata;
/// where tiles overlap the later tile wins.
inline ElevationGrid assemble_grid(std::span<const ElevationGrid> tiles, const GridExtent& extent) {
  if (tiles.empty()) throw DataError("no tiles to assemble");
  const double cs = tiles.front().cell_size();
  for (const auto& t : tiles) {
    if (t.cell_size() != cs) {
      throw DataError("inconsistent cell sizes: " + std::to_string(cs) + " and " + std::to_string(t.cell_size()));
    }
  }
  auto lattice = [cs](double v, const char* what) {
    const double k = v / cs;
    const double r = std::round(k);
    if (std::abs(k - r) > 1e-6) throw DataError(std::string(what) + " is not on the cell lattice");
    return static_cast<std::int64_t>(r);
  };
  const std::int64_t ncols = lattice(extent.area.width, "extent width");
  const std::int64_t nrows = lattice(extent.area.height, "extent height");
  if (ncols < 2 || nrows < 2) throw DataError("extent smaller than 2x2 points");

  std::vector<float> heights(static_cast<std::size_t>(ncols * nrows), kNoData);
  for (const auto& t : tiles) {
    const std::int64_t col0 = lattice(t.origin_easting() - extent.origin_easting, "tile easting");
    const std::int64_t south0 = lattice(t.origin_northing() - extent.origin_northing, "tile northing");
    const auto tc = static_cast<std::int64_t>(t.ncols());
    const auto tr = static_cast<std::int64_t>(t.nrows());
    if (col0 < 0 || south0 < 0 || col0 + tc > ncols || south0 + tr > nrows) {
      throw DataError("tile at (" + std::to_string(t.origin_easting()) + ", " +
                      std::to_string(t.origin_northing()) + ") lies outside the extent");
    }
    for (std::int64_t r = 0; r < tr; ++r) {
      const std::int64_t south = south0 + (tr - 1 - r);
      const std::int64_t row = nrows - 1 - south;
      for (std::int64_t c = 0; c < tc; ++c) {
        const float h = t.at(static_cast<std::size_t>(r), static_cast<std::size_t>(c));
        heights[static_cast<std::size_t>(row * ncols + col0 + c)] = t.is_nodata_value(h) ? kNoData : h;
      }
    }
  }
  return {static_cast<std::size_t>(ncols), static_cast<std::size_t>(nrows), cs,
          extent.origin_easting, extent.origin_northing, std::move(heights)};
}

// ---------------------------------------------------------------------------
// Sea mask

namespace detail {

/// Row/column offsets of the 8 neighbours in canonical order:
/// bottom, bottom-right, right, top-right, top, top-left, left, bottom-left.
/// Row 0 is north, so "bottom" is row + 1.
inline constexpr std::array<std::array<int, 2>, 8> kNeighbourOffsets = {{
    {1, 0}, {1, 1}, {0, 1}, {-1, 1}, {-1, 0}, {-1, -1}, {0, -1}, {1, -1},
}};

/// Calls f(neighbour_index, direction) for every in-bounds neighbour of p.
template <class F>
void for_each_neighbour(std::size_t ncols, std::size_t nrows, std::size_t p, F&& f) {
  const auto row = static_cast<std::int64_t>(p / ncols);
  const auto col = static_cast<std::int64_t>(p % ncols);
  for (int d = 0; d < 8; ++d) {
    const std::int64_t r = row + kNeighbourOffsets[static_cast<std::size_t>(d)][0];
    const std::int64_t c = col + kNeighbourOffsets[static_cast<std::size_t>(d)][1];
    if (r < 0 || c < 0 || r >= static_cast<std::int64_t>(nrows) || c >= static_cast<std::int64_t>(ncols)) continue;
    f(static_cast<std::size_t>(r) * ncols + static_cast<std::size_t>(c), d);
  }
}

/// Block visiting order for the mask passes: starts at the top-left block,
/// runs along the top row, down the right column, back along the bottom row,
/// up the left column, then repeats on the inner ring.
inline std::vector<std::array<std::size_t, 2>> spiral_blocks(std::size_t block_rows, std::size_t block_cols) {
  std::vector<std::array<std::size_t, 2>> order;
  order.reserve(block_rows * block_cols);
  std::int64_t top = 0;
  std::int64_t left = 0;
  std::int64_t bottom = static_cast<std::int64_t>(block_rows) - 1;
  std::int64_t right = static_cast<std::int64_t>(block_cols) - 1;
  auto push = [&](std::int64_t r, std::int64_t c) {
    order.push_back({static_cast<std::size_t>(r), static_cast<std::size_t>(c)});
  };
  while (top <= bottom && left <= right) {
    for (std::int64_t c = left; c <= right; ++c) push(top, c);
    for (std::int64_t r = top + 1; r <= bottom; ++r) push(r, right);
    if (top < bottom) {
      for (std::int64_t c = right - 1; c >= left; --c) push(bottom, c);
    }
    if (left < right) {
      for (std::int64_t r = bottom - 1; r > top; --r) push(r, left);
    }
    ++top;
    ++left;
    --bottom;
    --right;
  }
  return order;
}

}  // namespace detail

/// Per-point sea/land labels.
struct SeaMask {
  std::size_t ncols = 0;
  std::size_t nrows = 0;
  std::vector<std::uint8_t> sea;  // 1 = sea, 0 = land

  bool is_sea(std::size_t index) const noexcept { return sea[index] != 0; }
  std::size_t sea_count() const noexcept {
    return static_cast<std::size_t>(std::count(sea.begin(), sea.end(), std::uint8_t{1}));
  }
  friend bool operator==(const SeaMask&, const SeaMask&) = default;
};

/// Runs the block propagation passes starting from `mask` until no label changes.
/// A point becomes sea if its height is below 0 m or missing and it lies on the
/// map edge or next to (8-neighbour) an existing sea point. Each 80x80 block is
/// relaxed until stable before moving on; blocks are visited in spiral order and
/// the whole sweep repeats until nothing changes.
inline SeaMask propagate_sea_mask(const ElevationGrid& grid, SeaMask mask, std::size_t block_size = 80) {
  if (block_size == 0) throw std::invalid_argument("block size must be positive");
  const std::size_t nc = grid.ncols();
  const std::size_t nr = grid.nrows();
  if (mask.sea.size() != grid.size()) {
    mask = SeaMask{nc, nr, std::vector<std::uint8_t>(grid.size(), 0)};
  }
  auto candidate = [&](std::size_t p) { return grid.is_nodata(p) || grid[p] < 0.0f; };
  auto on_edge = [&](std::size_t p) {
    const std::size_t r = p / nc;
    const std::size_t c = p % nc;
    return r == 0 || c == 0 || r + 1 == nr || c + 1 == nc;
  };
  const auto blocks = detail::spiral_blocks((nr + block_size - 1) / block_size, (nc + block_size - 1) / block_size);

  bool sweep_changed = true;
  while (sweep_changed) {
    sweep_changed = false;
    for (const auto& [br, bc] : blocks) {
      const std::size_t r0 = br * block_size;
      const std::size_t c0 = bc * block_size;
      const std::size_t r1 = std::min(nr, r0 + block_size);
      const std::size_t c1 = std::min(nc, c0 + block_size);
      bool block_changed = true;
      while (block_changed) {
        block_changed = false;
        for (std::size_t r = r0; r < r1; ++r) {
          for (std::size_t c = c0; c < c1; ++c) {
            const std::size_t p = r * nc + c;
            if (mask.sea[p] || !candidate(p)) continue;
            bool touches = on_edge(p);
            if (!touches) {
              detail::for_each_neighbour(nc, nr, p, [&](std::size_t q, int) {
                if (mask.sea[q]) touches = true;
              });
            }
            if (touches) {
              mask.sea[p] = 1;
              block_changed = true;
              sweep_changed = true;
            }
          }
        }
      }
    }
  }
  return mask;
}

inline SeaMask build_sea_mask(const ElevationGrid& grid, std::size_t block_size = 80) {
  return propagate_sea_mask(grid, SeaMask{grid.ncols(), grid.nrows(), std::vector<std::uint8_t>(grid.size(), 0)},
                            block_size);
}

/// Depth added per frontier step of the artificial sea bed.
inline constexpr double kSeaSlopeStep = 0.01;

/// Replaces sea heights by a progressively deepening bed.
///
/// Every sea point starts untreated. Frontier S1 holds the untreated points next
/// to a non-untreated point; each frontier point is set 0.01 m below the lowest
/// of its neighbours that are not untreated, then marked treated, and the next
/// frontier is the untreated neighbours of the current one. Missing heights on
/// land (holes not connected to the sea) are sloped the same way, so the result
/// has no nodata unless a connected region has no land at all.
inline ElevationGrid apply_sea_slope(const ElevationGrid& grid, const SeaMask& mask) {
  if (mask.sea.size() != grid.size()) throw std::invalid_argument("sea mask does not match grid");
  enum : std::uint8_t { kLand = 0, kUntreated = 1, kTreated = 2 };
  const std::size_t nc = grid.ncols();
  const std::size_t nr = grid.nrows();
  ElevationGrid out = grid;
  std::vector<std::uint8_t> state(grid.size(), kLand);
  for (std::size_t p = 0; p < grid.size(); ++p) {
    if (mask.sea[p] || grid.is_nodata(p)) state[p] = kUntreated;
  }

  std::vector<std::size_t> frontier;
  for (std::size_t p = 0; p < grid.size(); ++p) {
    if (state[p] != kUntreated) continue;
    bool next_to_land = false;
    detail::for_each_neighbour(nc, nr, p, [&](std::size_t q, int) {
      if (state[q] == kLand) next_to_land = true;
    });
    if (next_to_land) frontier.push_back(p);
  }

  std::vector<float> assigned;
  std::vector<std::uint8_t> queued(grid.size(), 0);
  while (!frontier.empty()) {
    assigned.resize(frontier.size());
    for (std::size_t i = 0; i < frontier.size(); ++i) {
      float lowest = std::numeric_limits<float>::infinity();
      detail::for_each_neighbour(nc, nr, frontier[i], [&](std::size_t q, int) {
        if (state[q] != kUntreated) lowest = std::min(lowest, out[q]);
      });
      assigned[i] = static_cast<float>(static_cast<double>(lowest) - kSeaSlopeStep);
    }
    for (std::size_t i = 0; i < frontier.size(); ++i) {
      out[frontier[i]] = assigned[i];
      state[frontier[i]] = kTreated;
    }
    std::vector<std::size_t> next;
    for (std::size_t p : frontier) {
      detail::for_each_neighbour(nc, nr, p, [&](std::size_t q, int) {
        if (state[q] == kUntreated && !queued[q]) {
          queued[q] = 1;
          next.push_back(q);
        }
      });
    }
    std::sort(next.begin(), next.end());
    frontier = std::move(next);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Continuous height function

/// Bilinear interpolation at (x, y) meters from the south-west grid point.
/// Grid nodes return their stored value exactly.
inline double interpolate(const ElevationGrid& grid, double x, double y) {
  const DomainRect ext = grid.extent();
  if (!(x >= 0.0 && y >= 0.0 && x <= ext.width && y <= ext.height)) {
    throw std::domain_error("point (" + std::to_string(x) + ", " + std::to_string(y) +
                            ") lies outside the grid extent");
  }
  const double cs = grid.cell_size();
  const double fc = x / cs;
  const double fs = y / cs;  // rows counted from the south
  const auto c0 = std::min(static_cast<std::size_t>(fc), grid.ncols() - 2);
  const auto s0 = std::min(static_cast<std::size_t>(fs), grid.nrows() - 2);
  const double tx = fc - static_cast<double>(c0);
  const double ty = fs - static_cast<double>(s0);
  const std::size_t row_south = grid.nrows() - 1 - s0;
  const std::size_t row_north = row_south - 1;
  const double h00 = grid.at(row_south, c0);
  const double h10 = grid.at(row_south, c0 + 1);
  const double h01 = grid.at(row_north, c0);
  const double h11 = grid.at(row_north, c0 + 1);
  if (tx == 0.0 && ty == 0.0) return h00;
  return (1.0 - tx) * (1.0 - ty) * h00 + tx * (1.0 - ty) * h10 + (1.0 - tx) * ty * h01 + tx * ty * h11;
}

/// Interpolates after clamping (x, y) into the grid extent.
inline double interpolate_clipped(const ElevationGrid& grid, double x, double y) {
  const DomainRect ext = grid.extent();
  return interpolate(grid, std::clamp(x, 0.0, ext.width), std::clamp(y, 0.0, ext.height));
}

/// sqrt(max(0, h(i, j)) * max(0, h(k, l))): a 4-D objective built from two
/// copies of the terrain. Negative heights count as 0.
inline double product_objective_4d(const ElevationGrid& grid, double i, double j, double k, double l) {
  const double a = std::max(0.0, interpolate(grid, i, j));
  const double b = std::max(0.0, interpolate(grid, k, l));
  return std::sqrt(a * b);
}

// ---------------------------------------------------------------------------
// Synthetic terrain

inline constexpr double kSynthMinHeight = -100.0;
inline constexpr double kSynthMaxHeight = 1400.0;

/// Deterministic multi-octave value noise scaled to [-100, 1400] m.
///
/// Octave 0 has a lattice spacing of a quarter of the larger grid side; octave k
/// halves the spacing and has amplitude ruggedness * 0.5^k. With ruggedness 0
/// only the smooth base octave remains.
inline ElevationGrid synth_terrain(std::uint64_t seed, std::size_t nrows, std::size_t ncols, double ruggedness,
                                   double cell_size = 50.0) {
  if (nrows < 2 || ncols < 2) throw DataError("synthetic terrain needs at least 2x2 points");
  if (!(ruggedness >= 0.0 && ruggedness <= 1.0)) throw DataError("ruggedness must lie in [0, 1]");
  constexpr int kOctaves = 6;
  const double base_spacing = std::max(2.0, static_cast<double>(std::max(nrows, ncols)) / 4.0);

  auto lattice_value = [seed](int octave, std::int64_t lr, std::int64_t lc) {
    std::uint64_t h = hash_combine(seed, static_cast<std::uint64_t>(octave));
    h = hash_combine(h, static_cast<std::uint64_t>(lr));
    h = hash_combine(h, static_cast<std::uint64_t>(lc));
    return static_cast<double>(h >> 11) * 0x1.0p-53 * 2.0 - 1.0;
  };
  auto smooth = [](double t) { return t * t * (3.0 - 2.0 * t); };

  std::vector<double> field(nrows * ncols, 0.0);
  for (int octave = 0; octave < kOctaves; ++octave) {
    const double amplitude = octave == 0 ? 1.0 : ruggedness * std::pow(0.5, octave);
    if (amplitude == 0.0) continue;
    const double spacing = base_spacing / std::pow(2.0, octave);
    for (std::size_t r = 0; r < nrows; ++r) {
      const double fr = static_cast<double>(r) / spacing;
      const auto lr = static_cast<std::int64_t>(std::floor(fr));
      const double tr = smooth(fr - static_cast<double>(lr));
      for (std::size_t c = 0; c < ncols; ++c) {
        const double fc = static_cast<double>(c) / spacing;
        const auto lc = static_cast<std::int64_t>(std::floor(fc));
        const double tc = smooth(fc - static_cast<double>(lc));
        const double v00 = lattice_value(octave, lr, lc);
        const double v01 = lattice_value(octave, lr, lc + 1);
        const double v10 = lattice_value(octave, lr + 1, lc);
        const double v11 = lattice_value(octave, lr + 1, lc + 1);
        const double top = v00 + (v01 - v00) * tc;
        const double bottom = v10 + (v11 - v10) * tc;
        field[r * ncols + c] += amplitude * (top + (bottom - top) * tr);
      }
    }
  }
  const auto [lo_it, hi_it] = std::minmax_element(field.begin(), field.end());
  const double lo = *lo_it;
  const double span = *hi_it - lo;
  std::vector<float> heights(field.size());
  for (std::size_t i = 0; i < field.size(); ++i) {
    const double t = span > 0.0 ? (field[i] - lo) / span : 0.0;
    heights[i] = static_cast<float>(kSynthMinHeight + t * (kSynthMaxHeight - kSynthMinHeight));
  }
  return {ncols, nrows, cell_size, 0.0, 0.0, std::move(heights)};
}

}  // namespace terrabench
