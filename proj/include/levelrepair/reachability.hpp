#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "levelrepair/level.hpp"

namespace levelrepair {

struct Offset {
  int dr = 0;
  int dc = 0;
  auto operator<=>(const Offset&) const = default;
};

/// A relative move from a source cell. All offsets are relative to the
/// source; `delta` must also be listed in `open`.
struct MoveRule {
  Offset delta;
  std::vector<Offset> open;
  std::vector<Offset> solid;
  auto operator<=>(const MoveRule&) const = default;
};

inline constexpr int kMaxRuleRadius = 6;

struct MovementTemplate {
  std::string name;
  std::vector<MoveRule> rules;

  /// Sorts offsets and rules into canonical order and checks invariants.
  /// Throws InvalidTemplate.
  void canonicalize();
  bool operator==(const MovementTemplate&) const = default;
};

MovementTemplate builtin_template(std::string_view domain);  // cave | mario | supercat
MovementTemplate parse_template_json(std::string_view json_text);
std::string template_to_json(const MovementTemplate& tmpl);
MovementTemplate load_template(const std::string& path);

/// True when every required cell of `rule` applied at `from` is in bounds and
/// has the required kind in `level`.
bool rule_applies(const Level& level, const MoveRule& rule, Cell from);

std::vector<Cell> legal_moves(const Level& level, const MovementTemplate& tmpl, Cell from);

struct ReachResult {
  bool solvable = false;
  std::optional<std::vector<Cell>> path;
  std::size_t visited_count = 0;
};

/// Breadth-first search from Start; the returned path is a shortest witness.
ReachResult check_solvable(const Level& level, const MovementTemplate& tmpl);

}  // namespace levelrepair
