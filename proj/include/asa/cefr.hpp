#pragma once

#include <map>
#include <string>
#include <vector>

#include "asa/util.hpp"

namespace asa {

enum class Aspect { content, delivery, language_use, holistic };

inline constexpr Aspect kAllAspects[] = {Aspect::content, Aspect::delivery,
                                         Aspect::language_use, Aspect::holistic};

std::string aspect_name(Aspect a);
Aspect aspect_from_name(const std::string& name);

// Ordered proficiency label space. Class indices are 1-based and contiguous
// (1..8 on the default scale); adjacent_margins[i] is the ordinal distance
// between class i+1 and class i+2.
struct CefrScale {
  std::vector<std::string> levels;
  std::map<double, int> score_map;  // raw half-point score -> class index
  std::vector<double> adjacent_margins;

  static CefrScale default_scale();

  int num_levels() const { return int(levels.size()); }
  void validate() const;

  // Raw score -> class index; unknown scores are an error.
  int digitize(double score) const;

  // Sum of adjacent margins along the inclusive path between the two
  // classes; symmetric, zero iff equal.
  double cumulative_distance(int y, int y_k) const;

  const std::string& level_name(int class_index) const;
};

// Shared path-sum over an explicit margin vector (len = classes - 1),
// classes 1-based.
double cumulative_distance(const std::vector<double>& margins, int y, int y_k);

}  // namespace asa
