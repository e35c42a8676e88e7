#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "terrabench/errors.hpp"

namespace terrabench {

/// ESRI convention for missing heights.
inline constexpr float kNoData = -9999.0f;

/// Rectangular optimisation domain, lower-left corner at (0, 0), in meters.
struct DomainRect {
  double width = 7.0e5;
  double height = 1.3e6;

  bool contains(double x, double y) const noexcept {
    return x >= 0.0 && y >= 0.0 && x <= width && y <= height;
  }
};

/// Index of a grid point. Row 0 is the northernmost row (file order of an
/// ESRI ASCII grid); column 0 is the westernmost column.
struct GridPoint {
  std::size_t row = 0;
  std::size_t col = 0;

  friend bool operator==(const GridPoint&, const GridPoint&) = default;
};

/// Raster of single-precision heights.
///
/// Heights are stored row-major with row 0 in the north. The origin is the
/// easting/northing of the south-west grid point, i.e. point (nrows-1, 0).
class ElevationGrid {
 public:
  ElevationGrid() = default;

  ElevationGrid(std::size_t ncols, std::size_t nrows, double cell_size, double origin_easting,
                double origin_northing, std::vector<float> heights, float nodata_value = kNoData)
      : ncols_(ncols),
        nrows_(nrows),
        cell_size_(cell_size),
        origin_easting_(origin_easting),
        origin_northing_(origin_northing),
        nodata_(nodata_value),
        heights_(std::move(heights)) {
    if (ncols_ < 2 || nrows_ < 2) {
      throw DataError("elevation grid needs at least 2x2 points");
    }
    if (!(cell_size_ > 0.0)) {
      throw DataError("elevation grid cell size must be positive");
    }
    if (heights_.size() != ncols_ * nrows_) {
      throw DataError("elevation grid height array does not match ncols*nrows");
    }
  }

  /// Grid of the given shape filled with one value.
  static ElevationGrid filled(std::size_t ncols, std::size_t nrows, double cell_size, float value,
                              double origin_easting = 0.0, double origin_northing = 0.0) {
    return {ncols, nrows, cell_size, origin_easting, origin_northing,
            std::vector<float>(ncols * nrows, value)};
  }

  std::size_t ncols() const noexcept { return ncols_; }
  std::size_t nrows() const noexcept { return nrows_; }
  std::size_t size() const noexcept { return heights_.size(); }
  double cell_size() const noexcept { return cell_size_; }
  double origin_easting() const noexcept { return origin_easting_; }
  double origin_northing() const noexcept { return origin_northing_; }
  float nodata_value() const noexcept { return nodata_; }

  std::span<const float> heights() const noexcept { return heights_; }
  std::span<float> heights() noexcept { return heights_; }

  float operator[](std::size_t index) const noexcept { return heights_[index]; }
  float& operator[](std::size_t index) noexcept { return heights_[index]; }

  float at(std::size_t row, std::size_t col) const noexcept { return heights_[row * ncols_ + col]; }
  float& at(std::size_t row, std::size_t col) noexcept { return heights_[row * ncols_ + col]; }
  float at(GridPoint p) const noexcept { return at(p.row, p.col); }
  float& at(GridPoint p) noexcept { return at(p.row, p.col); }

  std::size_t index(GridPoint p) const noexcept { return p.row * ncols_ + p.col; }
  GridPoint point(std::size_t index) const noexcept { return {index / ncols_, index % ncols_}; }

  bool is_nodata(std::size_t index) const noexcept { return is_nodata_value(heights_[index]); }
  bool is_nodata_value(float h) const noexcept { return h == nodata_ || std::isnan(h); }

  bool has_nodata() const noexcept {
    for (float h : heights_) {
      if (is_nodata_value(h)) return true;
    }
    return false;
  }

  /// Extent of the interpolation domain: first to last grid point.
  DomainRect extent() const noexcept {
    return {static_cast<double>(ncols_ - 1) * cell_size_, static_cast<double>(nrows_ - 1) * cell_size_};
  }

  /// Position of a grid point relative to the south-west grid point, in meters.
  double local_x(GridPoint p) const noexcept { return static_cast<double>(p.col) * cell_size_; }
  double local_y(GridPoint p) const noexcept {
    return static_cast<double>(nrows_ - 1 - p.row) * cell_size_;
  }

  double easting(GridPoint p) const noexcept { return origin_easting_ + local_x(p); }
  double northing(GridPoint p) const noexcept { return origin_northing_ + local_y(p); }

  friend bool operator==(const ElevationGrid& a, const ElevationGrid& b) {
    if (a.ncols_ != b.ncols_ || a.nrows_ != b.nrows_ || a.cell_size_ != b.cell_size_ ||
        a.origin_easting_ != b.origin_easting_ || a.origin_northing_ != b.origin_northing_) {
      return false;
    }
    for (std::size_t i = 0; i < a.heights_.size(); ++i) {
      const bool na = a.is_nodata(i);
      const bool nb = b.is_nodata(i);
      if (na != nb || (!na && a.heights_[i] != b.heights_[i])) return false;
    }
    return true;
  }

 private:
  std::size_t ncols_ = 0;
  std::size_t nrows_ = 0;
  double cell_size_ = 1.0;
  double origin_easting_ = 0.0;
  double origin_northing_ = 0.0;
  float nodata_ = kNoData;
  std::vector<float> heights_;
};

}  // namespace terrabench
