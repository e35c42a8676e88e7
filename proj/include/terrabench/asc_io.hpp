#pragma once

// Reading and writing elevation rasters:
//  - ESRI ASCII grid tiles (.asc), the distribution format of OS Terrain 50;
//  - the binary cache of a preprocessed grid;
//  - plain-text patch files with manual height edits.

#include <algorithm>
#include <array>
#include <bit>
#include <cctype>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "terrabench/errors.hpp"
#include "terrabench/grid.hpp"
#include "terrabench/io_util.hpp"

namespace terrabench {

namespace detail {

inline std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

inline std::vector<std::string_view> tokens(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    const std::size_t start = i;
    while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

inline bool parse_number(std::string_view token, double& value) {
  const std::string s(token);
  char* end = nullptr;
  value = std::strtod(s.c_str(), &end);
  return !s.empty() && end == s.c_str() + s.size();
}

}  // namespace detail

/// Parses an ESRI ASCII grid. Header keys are case-insensitive; `xllcenter` /
/// `yllcenter` are accepted in place of the corner keys. A missing
/// `nodata_value` defaults to -9999.
inline ElevationGrid parse_asc(std::string_view text, const std::string& source = "<asc>") {
  std::map<std::string, double> header;
  std::vector<float> heights;
  std::size_t ncols = 0;
  std::size_t nrows = 0;
  std::size_t rows_read = 0;
  std::size_t line_no = 0;
  bool in_body = false;

  auto require = [&](const char* key) -> double {
    auto it = header.find(key);
    if (it == header.end()) throw ParseError(source, line_no, std::string("missing header key '") + key + "'");
    return it->second;
  };

  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    const std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    const auto toks = detail::tokens(line);
    if (toks.empty()) {
      if (end == text.size()) break;
      continue;
    }

    if (!in_body) {
      const bool alpha = std::isalpha(static_cast<unsigned char>(toks[0][0])) != 0;
      if (alpha) {
        if (toks.size() != 2) throw ParseError(source, line_no, "malformed header line");
        double v = 0.0;
        if (!detail::parse_number(toks[1], v)) {
          throw ParseError(source, line_no, "non-numeric header value for '" + std::string(toks[0]) + "'");
        }
        header[detail::lower(toks[0])] = v;
        continue;
      }
      in_body = true;
      const double nc = require("ncols");
      const double nr = require("nrows");
      require("cellsize");
      if (!header.contains("xllcorner") && !header.contains("xllcenter")) require("xllcorner");
      if (!header.contains("yllcorner") && !header.contains("yllcenter")) require("yllcorner");
      if (nc < 2 || nr < 2 || nc != static_cast<double>(static_cast<std::size_t>(nc)) ||
          nr != static_cast<double>(static_cast<std::size_t>(nr))) {
        throw ParseError(source, line_no, "ncols/nrows must be integers >= 2");
      }
      ncols = static_cast<std::size_t>(nc);
      nrows = static_cast<std::size_t>(nr);
      heights.reserve(ncols * nrows);
    }

    if (rows_read == nrows) throw ParseError(source, line_no, "more data rows than nrows");
    if (toks.size() != ncols) {
      throw ParseError(source, line_no,
                       "row has " + std::to_string(toks.size()) + " values, expected " + std::to_string(ncols));
    }
    for (auto tok : toks) {
      double v = 0.0;
      if (!detail::parse_number(tok, v)) {
        throw ParseError(source, line_no, "non-numeric cell '" + std::string(tok) + "'");
      }
      heights.push_back(static_cast<float>(v));
    }
    ++rows_read;
    if (end == text.size()) break;
  }

  if (!in_body) {
    // Header only: report the first missing key, or the missing body.
    require("ncols");
    require("nrows");
    require("cellsize");
    throw ParseError(source, line_no, "no data rows");
  }
  if (rows_read != nrows) {
    throw ParseError(source, line_no,
                     "found " + std::to_string(rows_read) + " data rows, expected " + std::to_string(nrows));
  }

  const double cell = header["cellsize"];
  double xll = header.contains("xllcorner") ? header["xllcorner"] : header["xllcenter"];
  double yll = header.contains("yllcorner") ? header["yllcorner"] : header["yllcenter"];
  const float nodata = header.contains("nodata_value") ? static_cast<float>(header["nodata_value"]) : kNoData;
  if (!(cell > 0.0)) throw ParseError(source, 0, "cellsize must be positive");

  // Heights keep their own sentinel; normalise to the library sentinel so
  // tiles with different headers can be assembled.
  if (nodata != kNoData) {
    for (float& h : heights) {
      if (h == nodata) h = kNoData;
    }
  }
  return {ncols, nrows, cell, xll, yll, std::move(heights), kNoData};
}

inline ElevationGrid load_asc_tile(const std::filesystem::path& path) {
  return parse_asc(read_file(path), path.string());
}

/// Serialises a grid as ESRI ASCII (used for fixtures and exports).
inline std::string format_asc(const ElevationGrid& grid) {
  std::string out;
  out += "ncols " + std::to_string(grid.ncols()) + "\n";
  out += "nrows " + std::to_string(grid.nrows()) + "\n";
  out += "xllcorner " + format_double(grid.origin_easting()) + "\n";
  out += "yllcorner " + format_double(grid.origin_northing()) + "\n";
  out += "cellsize " + format_double(grid.cell_size()) + "\n";
  out += "nodata_value " + format_double(grid.nodata_value()) + "\n";
  for (std::size_t r = 0; r < grid.nrows(); ++r) {
    for (std::size_t c = 0; c < grid.ncols(); ++c) {
      if (c) out += ' ';
      out += format_double(grid.at(r, c));
    }
    out += '\n';
  }
  return out;
}

// Binary cache layout (all little-endian):
//   u64 ncols, u64 nrows, f64 cell_size, f64 origin_easting, f64 origin_northing,
//   then ncols*nrows f32 heights in row-major order (row 0 = north).
// The cache stores preprocessed grids; nodata cells, if any, keep -9999.

namespace detail {

template <class T>
void put_le(std::string& out, T value) {
  static_assert(sizeof(T) == 8 || sizeof(T) == 4);
  using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
  const U bits = std::bit_cast<U>(value);
  for (std::size_t i = 0; i < sizeof(U); ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xFF));
}

template <class T>
T get_le(const unsigned char* p) {
  using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
  U bits = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) bits |= static_cast<U>(p[i]) << (8 * i);
  return std::bit_cast<T>(bits);
}

}  // namespace detail

inline constexpr std::size_t kCacheHeaderBytes = 5 * 8;

inline std::string encode_cache(const ElevationGrid& grid) {
  std::string out;
  out.reserve(kCacheHeaderBytes + 4 * grid.size());
  detail::put_le<std::uint64_t>(out, grid.ncols());
  detail::put_le<std::uint64_t>(out, grid.nrows());
  detail::put_le<double>(out, grid.cell_size());
  detail::put_le<double>(out, grid.origin_easting());
  detail::put_le<double>(out, grid.origin_northing());
  for (float h : grid.heights()) detail::put_le<float>(out, h);
  return out;
}

inline ElevationGrid decode_cache(std::string_view bytes, const std::string& source = "<cache>") {
  if (bytes.size() < kCacheHeaderBytes) throw ParseError(source + ": truncated cache header");
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  const auto ncols = detail::get_le<std::uint64_t>(p);
  const auto nrows = detail::get_le<std::uint64_t>(p + 8);
  const auto cell = detail::get_le<double>(p + 16);
  const auto oe = detail::get_le<double>(p + 24);
  const auto on = detail::get_le<double>(p + 32);
  if (ncols < 2 || nrows < 2 || ncols > (1ULL << 32) || nrows > (1ULL << 32)) {
    throw ParseError(source + ": implausible grid shape in cache header");
  }
  const std::size_t count = static_cast<std::size_t>(ncols * nrows);
  if (bytes.size() != kCacheHeaderBytes + 4 * count) {
    throw ParseError(source + ": cache size does not match its header");
  }
  std::vector<float> heights(count);
  for (std::size_t i = 0; i < count; ++i) heights[i] = detail::get_le<float>(p + kCacheHeaderBytes + 4 * i);
  return {static_cast<std::size_t>(ncols), static_cast<std::size_t>(nrows), cell, oe, on, std::move(heights)};
}

inline void write_cache(const ElevationGrid& grid, const std::filesystem::path& path) {
  write_file_atomic(path, encode_cache(grid));
}

inline ElevationGrid read_cache(const std::filesystem::path& path) {
  return decode_cache(read_file(path), path.string());
}

// ---------------------------------------------------------------------------
// Ordnance Survey National Grid references and patch files.

/// South-west corner (easting, northing) of an OS grid reference such as
/// "NT68" (10 km square) or "NT" (100 km square). Spaces are ignored.
inline std::array<double, 2> os_grid_square_origin(std::string_view ref) {
  std::string s;
  for (char c : ref) {
    if (!std::isspace(static_cast<unsigned char>(c))) s.push_back(static_cast<char>(std::toupper(c)));
  }
  if (s.size() < 2 || (s.size() - 2) % 2 != 0 || !std::isalpha(static_cast<unsigned char>(s[0])) ||
      !std::isalpha(static_cast<unsigned char>(s[1])) || s[0] == 'I' || s[1] == 'I') {
    throw ParseError("invalid OS grid reference '" + std::string(ref) + "'");
  }
  int l1 = s[0] - 'A';
  int l2 = s[1] - 'A';
  if (l1 > 7) --l1;  // the letter I is not used
  if (l2 > 7) --l2;
  const int e100 = (((l1 - 2) % 5 + 5) % 5) * 5 + (l2 % 5);
  const int n100 = (19 - (l1 / 5) * 5) - (l2 / 5);
  const std::size_t ndigits = (s.size() - 2) / 2;
  double e = e100 * 100000.0;
  double n = n100 * 100000.0;
  if (ndigits > 0) {
    const std::string de = s.substr(2, ndigits);
    const std::string dn = s.substr(2 + ndigits, ndigits);
    for (char c : de + dn) {
      if (!std::isdigit(static_cast<unsigned char>(c))) {
        throw ParseError("invalid OS grid reference '" + std::string(ref) + "'");
      }
    }
    double scale = 100000.0;
    for (std::size_t i = 0; i < ndigits; ++i) scale /= 10.0;
    e += std::stod(de) * scale;
    n += std::stod(dn) * scale;
  }
  return {e, n};
}

/// One manual edit from a patch file.
///   set <easting> <northing> <height>          set a single grid point
///   lower_tile <ref> <height>                  set every point of the 10 km square
///                                              whose height is exactly 0 m
struct PatchEdit {
  enum class Kind { set_point, lower_tile } kind = Kind::set_point;
  double easting = 0.0;
  double northing = 0.0;
  std::string tile;
  float height = 0.0f;
};

inline std::vector<PatchEdit> parse_patch(std::string_view text, const std::string& source = "<patch>") {
  std::vector<PatchEdit> edits;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    const auto toks = detail::tokens(line);
    if (toks.empty()) continue;
    PatchEdit e;
    double v = 0.0;
    if (toks[0] == "set") {
      double x = 0.0;
      double y = 0.0;
      if (toks.size() != 4 || !detail::parse_number(toks[1], x) || !detail::parse_number(toks[2], y) ||
          !detail::parse_number(toks[3], v)) {
        throw ParseError(source, line_no, "expected: set <easting> <northing> <height>");
      }
      e.kind = PatchEdit::Kind::set_point;
      e.easting = x;
      e.northing = y;
    } else if (toks[0] == "lower_tile") {
      if (toks.size() != 3 || !detail::parse_number(toks[2], v)) {
        throw ParseError(source, line_no, "expected: lower_tile <grid ref> <height>");
      }
      e.kind = PatchEdit::Kind::lower_tile;
      e.tile = std::string(toks[1]);
      os_grid_square_origin(e.tile);
    } else {
      throw ParseError(source, line_no, "unknown patch directive '" + std::string(toks[0]) + "'");
    }
    e.height = static_cast<float>(v);
    edits.push_back(std::move(e));
  }
  return edits;
}

/// Applies patch edits in file order. Edits outside the grid are reported as DataError.
inline void apply_patch(ElevationGrid& grid, const std::vector<PatchEdit>& edits) {
  const double cs = grid.cell_size();
  auto to_point = [&](double e, double n, GridPoint& p) {
    const double col = (e - grid.origin_easting()) / cs;
    const double row_from_south = (n - grid.origin_northing()) / cs;
    if (col < 0 || row_from_south < 0 || col > static_cast<double>(grid.ncols() - 1) ||
        row_from_south > static_cast<double>(grid.nrows() - 1)) {
      return false;
    }
    p.col = static_cast<std::size_t>(std::llround(col));
    p.row = grid.nrows() - 1 - static_cast<std::size_t>(std::llround(row_from_south));
    return true;
  };
  for (const auto& e : edits) {
    if (e.kind == PatchEdit::Kind::set_point) {
      GridPoint p;
      if (!to_point(e.easting, e.northing, p)) {
        throw DataError("patch point (" + format_double(e.easting) + ", " + format_double(e.northing) +
                        ") lies outside the grid");
      }
      grid.at(p) = e.height;
      continue;
    }
    const auto [e0, n0] = os_grid_square_origin(e.tile);
    bool any = false;
    for (std::size_t r = 0; r < grid.nrows(); ++r) {
      for (std::size_t c = 0; c < grid.ncols(); ++c) {
        const GridPoint p{r, c};
        const double x = grid.easting(p);
        const double y = grid.northing(p);
        if (x >= e0 && x < e0 + 10000.0 && y >= n0 && y < n0 + 10000.0) {
          any = true;
          if (grid.at(p) == 0.0f) grid.at(p) = e.height;
        }
      }
    }
    if (!any) throw DataError("patch tile " + e.tile + " lies outside the grid");
  }
}

}  // namespace terrabench
