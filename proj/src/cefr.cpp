#include "asa/cefr.hpp"

#include <algorithm>

namespace asa {

std::string aspect_name(Aspect a) {
  switch (a) {
    case Aspect::content: return "content";
    case Aspect::delivery: return "delivery";
    case Aspect::language_use: return "language_use";
    case Aspect::holistic: return "holistic";
  }
  throw Error("aspect_name: invalid aspect");
}

Aspect aspect_from_name(const std::string& name) {
  for (Aspect a : kAllAspects)
    if (aspect_name(a) == name) return a;
  throw Error(msg("unknown aspect '", name, "' (expected content|delivery|language_use|holistic)"));
}

CefrScale CefrScale::default_scale() {
  CefrScale s;
  s.levels = {"Pre-A1", "A1", "A1+", "A2", "A2+", "B1", "B1+", "B2"};
  // Raw half-point scores 1.0 .. 4.5 map onto the eight classes; anything
  // else (including 5.0) is rejected rather than silently merged.
  for (int i = 0; i < 8; ++i) s.score_map[1.0 + 0.5 * i] = i + 1;
  s.adjacent_margins.assign(7, 1.0);
  return s;
}

void CefrScale::validate() const {
  require(!levels.empty(), "scale: no levels");
  require(adjacent_margins.size() == levels.size() - 1, "scale: expected ", levels.size() - 1,
          " adjacent margins, got ", adjacent_margins.size());
  for (double m : adjacent_margins)
    require(std::isfinite(m) && m >= 0.0, "scale: adjacent margins must be finite and >= 0");
  std::vector<int> seen;
  for (const auto& [score, cls] : score_map) {
    require(cls >= 1 && cls <= num_levels(), "scale: score ", score, " maps to invalid class ",
            cls);
    seen.push_back(cls);
  }
  std::sort(seen.begin(), seen.end());
  for (size_t i = 1; i < seen.size(); ++i)
    require(seen[i] != seen[i - 1], "scale: score_map is not injective (class ", seen[i],
            " mapped twice)");
  // score_map iterates keys in ascending order; classes must not decrease
  int prev = 0;
  for (const auto& [score, cls] : score_map) {
    require(cls > prev, "scale: score_map not monotone at score ", score);
    prev = cls;
  }
}

int CefrScale::digitize(double score) const {
  auto it = score_map.find(score);
  require(it != score_map.end(), "unknown score ", score, " (not a key of score_map)");
  return it->second;
}

double CefrScale::cumulative_distance(int y, int y_k) const {
  require(y >= 1 && y <= num_levels() && y_k >= 1 && y_k <= num_levels(),
          "cumulative_distance: class out of range (", y, ", ", y_k, ")");
  return asa::cumulative_distance(adjacent_margins, y, y_k);
}

const std::string& CefrScale::level_name(int class_index) const {
  require(class_index >= 1 && class_index <= num_levels(), "level_name: class out of range: ",
          class_index);
  return levels[class_index - 1];
}

double cumulative_distance(const std::vector<double>& margins, int y, int y_k) {
  int lo = std::min(y, y_k), hi = std::max(y, y_k);
  require(lo >= 1 && hi <= int(margins.size()) + 1, "cumulative_distance: class out of range (",
          y, ", ", y_k, ")");
  double d = 0.0;
  for (int c = lo; c < hi; ++c) d += margins[c - 1];
  return d;
}

}  // namespace asa
