#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "terrabench/errors.hpp"

namespace terrabench {

/// Half-open height interval [low, high) with a score and a colour key.
struct HeightBand {
  double low = 0.0;
  double high = 0.0;
  double score = 0.0;
  std::string colour;  // colour key, resolved by band_colour_hex()
  std::string label;

  bool contains(double h) const noexcept { return h >= low && h < high; }
};

/// Ordered, disjoint height bands used for scoring (GERT), basin statistics and
/// plot colouring.
class ScoreSchedule {
 public:
  ScoreSchedule() = default;
  explicit ScoreSchedule(std::vector<HeightBand> bands) : bands_(std::move(bands)) { validate(); }

  const std::vector<HeightBand>& bands() const noexcept { return bands_; }
  std::size_t size() const noexcept { return bands_.size(); }
  const HeightBand& operator[](std::size_t i) const { return bands_[i]; }

  std::optional<std::size_t> band_index(double h) const noexcept {
    for (std::size_t i = 0; i < bands_.size(); ++i) {
      if (bands_[i].contains(h)) return i;
    }
    return std::nullopt;
  }

  /// Score of the band containing h; heights outside every band score 0.
  double score(double h) const noexcept {
    const auto i = band_index(h);
    return i ? bands_[*i].score : 0.0;
  }

  double max_score() const noexcept {
    double m = 0.0;
    for (const auto& b : bands_) m = std::max(m, b.score);
    return m;
  }

  void validate() const {
    if (bands_.empty()) throw ConfigError("score schedule has no bands");
    for (std::size_t i = 0; i < bands_.size(); ++i) {
      const auto& b = bands_[i];
      if (!(b.low < b.high)) throw ConfigError("band " + std::to_string(i) + " is empty or inverted");
      if (!(b.score >= 0.0) || std::isinf(b.score)) {
        throw ConfigError("band " + std::to_string(i) + " has a negative or non-finite score");
      }
      if (i > 0 && b.low < bands_[i - 1].high) {
        throw ConfigError("bands " + std::to_string(i - 1) + " and " + std::to_string(i) +
                          " overlap or are out of order");
      }
    }
  }

 private:
  std::vector<HeightBand> bands_;
};

/// The Great Britain height bands and scores (metres).
inline ScoreSchedule default_schedule() {
  return ScoreSchedule({
      {-100, 0, 0, "lowland", "Below sea level"},
      {0, 600, 0, "lowland", "Lowland"},
      {600, 1000, 0, "mountainous", "Mountainous"},
      {1000, 1100, 0, "top_135_munros", "Top 135 Munros"},
      {1100, 1150, 0, "top_50_munros", "Top 50 Munros"},
      {1150, 1215, 0, "top_25_munros", "Top 25 Munros"},
      {1215, 1235, 1, "wider_bennevis", "Wider Ben Nevis massif"},
      {1235, 1297, 2, "cairngorm", "Cairngorm plateau"},
      {1297, 1310, 3, "benmacdui", "Ben Macdui"},
      {1310, 1340, 7, "almost_bennevis", "On Ben Nevis"},
      {1340, 1346, 10, "bennevis", "Ben Nevis"},
  });
}

/// Score 1 on [f_target, upper), 0 elsewhere: GERT under this schedule is ERT.
inline ScoreSchedule indicator_schedule(double f_target,
                                        double upper = std::numeric_limits<double>::infinity()) {
  return ScoreSchedule({{f_target, upper, 1.0, "bennevis", "Target"}});
}

/// Hex colour for a band colour key. Unknown keys map to grey.
inline std::string band_colour_hex(const std::string& key) {
  static const std::pair<const char*, const char*> kPalette[] = {
      {"lowland", "#b7d7a8"},        {"mountainous", "#6aa84f"},   {"top_135_munros", "#ffe599"},
      {"top_50_munros", "#f6b26b"},  {"top_25_munros", "#e69138"}, {"wider_bennevis", "#e06666"},
      {"cairngorm", "#c27ba0"},      {"benmacdui", "#8e7cc3"},     {"almost_bennevis", "#6fa8dc"},
      {"bennevis", "#073763"},
  };
  for (const auto& [name, hex] : kPalette) {
    if (key == name) return hex;
  }
  if (key.size() == 7 && key[0] == '#') return key;
  return "#999999";
}

}  // namespace terrabench
