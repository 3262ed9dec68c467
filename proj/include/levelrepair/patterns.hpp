#pragma once

#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "levelrepair/level.hpp"

namespace levelrepair {

using TilePair = std::pair<TileKind, TileKind>;

/// Allowed adjacent tile pairs. Horizontal pairs are (left, right), vertical
/// pairs are (top, bottom).
struct PatternRules {
  std::set<TilePair> horizontal;
  std::set<TilePair> vertical;
  std::string domain = "custom";

  bool allows_horizontal(TileKind left, TileKind right) const { return horizontal.contains({left, right}); }
  bool allows_vertical(TileKind top, TileKind bottom) const { return vertical.contains({top, bottom}); }
  bool operator==(const PatternRules&) const = default;
};

PatternRules extract_patterns(const Level& exemplar);

struct PatternViolation {
  Cell first;   // left or top cell
  Cell second;  // right or bottom cell
  bool horizontal = true;
  TileKind first_kind = TileKind::Empty;
  TileKind second_kind = TileKind::Empty;
};

std::vector<PatternViolation> check_patterns(const Level& level, const PatternRules& rules);

std::string patterns_to_json(const PatternRules& rules);
PatternRules parse_patterns_json(std::string_view json_text);
PatternRules load_patterns(const std::string& path);

/// Exemplar level shipped for each builtin domain.
Level builtin_exemplar(std::string_view domain);
PatternRules builtin_patterns(std::string_view domain);

}  // namespace levelrepair
