#include "levelrepair/reachability.hpp"

#include <algorithm>
#include <cstdlib>
#include <deque>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "levelrepair/error.hpp"
#include "levelrepair/io.hpp"

namespace levelrepair {
namespace {

using nlohmann::json;

MoveRule step(int dr, int dc) { return MoveRule{{dr, dc}, {{dr, dc}}, {}}; }

MoveRule walk(int dc) { return MoveRule{{0, dc}, {{0, dc}}, {{1, 0}}}; }

// Rise straight up to `height`, then drift horizontally by `drift` at the apex.
MoveRule jump(int height, int drift) {
  MoveRule rule;
  rule.delta = {-height, drift};
  for (int h = 1; h <= height; ++h) rule.open.push_back({-h, 0});
  const int dir = drift > 0 ? 1 : -1;
  for (int d = dir; drift != 0 && d != drift + dir; d += dir) rule.open.push_back({-height, d});
  rule.solid.push_back({1, 0});
  return rule;
}

MovementTemplate platformer(std::string name, int max_jump, int max_drift, bool wall_jumps) {
  MovementTemplate t{std::move(name), {}};
  t.rules.push_back(walk(-1));
  t.rules.push_back(walk(1));
  t.rules.push_back(step(1, 0));
  for (int h = 1; h <= max_jump; ++h)
    for (int d = -max_drift; d <= max_drift; ++d) t.rules.push_back(jump(h, d));
  if (wall_jumps) {
    t.rules.push_back(MoveRule{{-1, 0}, {{-1, 0}}, {{0, -1}}});
    t.rules.push_back(MoveRule{{-1, 0}, {{-1, 0}}, {{0, 1}}});
    t.rules.push_back(MoveRule{{-1, 1}, {{-1, 0}, {-1, 1}}, {{0, -1}}});
    t.rules.push_back(MoveRule{{-1, -1}, {{-1, 0}, {-1, -1}}, {{0, 1}}});
  }
  t.canonicalize();
  return t;
}

std::vector<Offset> offsets_from_json(const json& arr) {
  std::vector<Offset> out;
  for (const auto& o : arr) {
    if (!o.is_array() || o.size() != 2) throw Error(ErrorCode::InvalidTemplate, "offset must be [dr, dc]");
    out.push_back({o[0].get<int>(), o[1].get<int>()});
  }
  return out;
}

json offsets_to_json(const std::vector<Offset>& offs) {
  json arr = json::array();
  for (auto o : offs) arr.push_back({o.dr, o.dc});
  return arr;
}

bool within_radius(Offset o) { return std::abs(o.dr) <= kMaxRuleRadius && std::abs(o.dc) <= kMaxRuleRadius; }

}  // namespace

void MovementTemplate::canonicalize() {
  if (rules.empty()) throw Error(ErrorCode::InvalidTemplate, "template '" + name + "' has no rules");
  for (auto& r : rules) {
    std::sort(r.open.begin(), r.open.end());
    r.open.erase(std::unique(r.open.begin(), r.open.end()), r.open.end());
    std::sort(r.solid.begin(), r.solid.end());
    r.solid.erase(std::unique(r.solid.begin(), r.solid.end()), r.solid.end());
    if (r.delta == Offset{0, 0}) throw Error(ErrorCode::InvalidTemplate, "zero move");
    if (!std::binary_search(r.open.begin(), r.open.end(), r.delta))
      throw Error(ErrorCode::InvalidTemplate, "move destination must be required open");
    for (const auto& o : r.open)
      if (!within_radius(o) || std::binary_search(r.solid.begin(), r.solid.end(), o))
        throw Error(ErrorCode::InvalidTemplate, "offset out of radius or required both open and solid");
    for (const auto& o : r.solid)
      if (!within_radius(o)) throw Error(ErrorCode::InvalidTemplate, "offset out of radius");
  }
  std::sort(rules.begin(), rules.end());
  rules.erase(std::unique(rules.begin(), rules.end()), rules.end());
}

MovementTemplate builtin_template(std::string_view domain) {
  if (domain == "cave") {
    MovementTemplate t{"cave", {step(-1, 0), step(1, 0), step(0, -1), step(0, 1)}};
    t.canonicalize();
    return t;
  }
  if (domain == "mario") return platformer("mario", 4, 3, false);
  if (domain == "supercat") return platformer("supercat", 3, 2, true);
  throw Error(ErrorCode::UnknownDomain, "no builtin template for '" + std::string(domain) + "'");
}

MovementTemplate parse_template_json(std::string_view json_text) {
  MovementTemplate t;
  try {
    auto j = json::parse(json_text);
    t.name = j.at("name").get<std::string>();
    for (const auto& r : j.at("rules")) {
      const auto& d = r.at("delta");
      MoveRule rule;
      rule.delta = {d.at(0).get<int>(), d.at(1).get<int>()};
      if (r.contains("open")) rule.open = offsets_from_json(r["open"]);
      if (r.contains("solid")) rule.solid = offsets_from_json(r["solid"]);
      t.rules.push_back(std::move(rule));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidTemplate, e.what());
  }
  t.canonicalize();
  return t;
}

std::string template_to_json(const MovementTemplate& tmpl) {
  // One rule per line keeps the files readable.
  std::string out = "{\n  \"name\": " + json(tmpl.name).dump() + ",\n  \"rules\": [";
  for (std::size_t i = 0; i < tmpl.rules.size(); ++i) {
    const auto& r = tmpl.rules[i];
    const json rule{{"delta", {r.delta.dr, r.delta.dc}}, {"open", offsets_to_json(r.open)},
                    {"solid", offsets_to_json(r.solid)}};
    out += (i ? ",\n    " : "\n    ") + rule.dump();
  }
  out += "\n  ]\n}\n";
  return out;
}

MovementTemplate load_template(const std::string& path) { return parse_template_json(read_text_file(path)); }

bool rule_applies(const Level& level, const MoveRule& rule, Cell from) {
  for (auto o : rule.open) {
    Cell c{from.row + o.dr, from.col + o.dc};
    if (!level.in_bounds(c) || !is_traversable(level.at(c))) return false;
  }
  for (auto o : rule.solid) {
    Cell c{from.row + o.dr, from.col + o.dc};
    if (!level.in_bounds(c) || level.at(c) != TileKind::Solid) return false;
  }
  return true;
}

std::vector<Cell> legal_moves(const Level& level, const MovementTemplate& tmpl, Cell from) {
  std::vector<Cell> out;
  if (!level.in_bounds(from) || !is_traversable(level.at(from))) return out;
  for (const auto& rule : tmpl.rules) {
    if (!rule_applies(level, rule, from)) continue;
    Cell dest{from.row + rule.delta.dr, from.col + rule.delta.dc};
    if (std::find(out.begin(), out.end(), dest) == out.end()) out.push_back(dest);
  }
  return out;
}

ReachResult check_solvable(const Level& level, const MovementTemplate& tmpl) {
  constexpr std::size_t kNone = static_cast<std::size_t>(-1);
  std::vector<std::size_t> parent(level.size(), kNone);
  std::vector<bool> seen(level.size(), false);
  std::deque<Cell> queue{level.start()};
  seen[level.index(level.start())] = true;

  ReachResult result;
  while (!queue.empty()) {
    Cell cur = queue.front();
    queue.pop_front();
    ++result.visited_count;
    if (cur == level.goal()) {
      result.solvable = true;
      std::vector<Cell> path;
      for (auto idx = level.index(cur); idx != kNone; idx = parent[idx]) path.push_back(level.cell_at(idx));
      std::reverse(path.begin(), path.end());
      result.path = std::move(path);
      return result;
    }
    for (Cell next : legal_moves(level, tmpl, cur)) {
      auto idx = level.index(next);
      if (seen[idx]) continue;
      seen[idx] = true;
      parent[idx] = level.index(cur);
      queue.push_back(next);
    }
  }
  return result;
}

}  // namespace levelrepair
