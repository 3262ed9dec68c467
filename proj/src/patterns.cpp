#include "levelrepair/patterns.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "levelrepair/error.hpp"

namespace levelrepair {
namespace {

using nlohmann::json;

// Same content as data/exemplars/*.txt.
constexpr std::string_view kCaveExemplar =
    "XXXXXXXXXXXX\n"
    "X---XX-----X\n"
    "X-{--X--XX-X\n"
    "X---XX---X-X\n"
    "XX-XXX-X-X-X\n"
    "X--X---X---X\n"
    "X-XX-XXXX-XX\n"
    "X----X-----X\n"
    "XXX-XX-XX--X\n"
    "X---X---X-XX\n"
    "X-X---X---XX\n"
    "X-XX-XXX---X\n"
    "X----X---}-X\n"
    "XX-X---X---X\n"
    "XXXXXXXXXXXX\n";

constexpr std::string_view kMarioExemplar =
    "------------------\n"
    "------------------\n"
    "------------------\n"
    "------------------\n"
    "------------------\n"
    "-----------XXX----\n"
    "------------------\n"
    "--------XX--------\n"
    "------------------\n"
    "---XX-------------\n"
    "------------------\n"
    "-{---------------}\n"
    "XXXXX--XXXXX-XXXXX\n"
    "XXXXX--XXXXX-XXXXX\n";

constexpr std::string_view kSupercatExemplar =
    "--------------------\n"
    "--------------------\n"
    "--------------------\n"
    "-----------------}--\n"
    "---------------XXXXX\n"
    "--------------------\n"
    "-----------XXX------\n"
    "--------------------\n"
    "-------XXX----------\n"
    "--------------------\n"
    "--XXX---------X-----\n"
    "--------------X-----\n"
    "--------------X-----\n"
    "------XXXX----X-----\n"
    "--------------X-----\n"
    "------------XXX-----\n"
    "--------------------\n"
    "-{------------------\n"
    "XXXXXX--XXXXXXXXXXXX\n"
    "XXXXXX--XXXXXXXXXXXX\n";

json pairs_to_json(const std::set<TilePair>& pairs) {
  json arr = json::array();
  for (auto [a, b] : pairs) arr.push_back(std::string{to_char(a), to_char(b)});
  return arr;
}

std::set<TilePair> pairs_from_json(const json& arr) {
  std::set<TilePair> out;
  for (const auto& p : arr) {
    auto s = p.get<std::string>();
    if (s.size() != 2) throw Error(ErrorCode::CorruptFile, "pair must be two tile characters");
    out.insert({tile_from_char(s[0]), tile_from_char(s[1])});
  }
  return out;
}

}  // namespace

PatternRules extract_patterns(const Level& exemplar) {
  PatternRules rules;
  rules.domain = exemplar.domain();
  for (int r = 0; r < exemplar.rows(); ++r) {
    for (int c = 0; c < exemplar.cols(); ++c) {
      if (c + 1 < exemplar.cols()) rules.horizontal.insert({exemplar.at(r, c), exemplar.at(r, c + 1)});
      if (r + 1 < exemplar.rows()) rules.vertical.insert({exemplar.at(r, c), exemplar.at(r + 1, c)});
    }
  }
  return rules;
}

std::vector<PatternViolation> check_patterns(const Level& level, const PatternRules& rules) {
  std::vector<PatternViolation> out;
  for (int r = 0; r < level.rows(); ++r) {
    for (int c = 0; c < level.cols(); ++c) {
      const auto here = level.at(r, c);
      if (c + 1 < level.cols() && !rules.allows_horizontal(here, level.at(r, c + 1)))
        out.push_back({{r, c}, {r, c + 1}, true, here, level.at(r, c + 1)});
      if (r + 1 < level.rows() && !rules.allows_vertical(here, level.at(r + 1, c)))
        out.push_back({{r, c}, {r + 1, c}, false, here, level.at(r + 1, c)});
    }
  }
  return out;
}

std::string patterns_to_json(const PatternRules& rules) {
  json j{{"domain", rules.domain},
         {"horizontal", pairs_to_json(rules.horizontal)},
         {"vertical", pairs_to_json(rules.vertical)}};
  return j.dump(2) + "\n";
}

PatternRules parse_patterns_json(std::string_view json_text) {
  PatternRules rules;
  try {
    auto j = json::parse(json_text);
    rules.domain = j.value("domain", "custom");
    rules.horizontal = pairs_from_json(j.at("horizontal"));
    rules.vertical = pairs_from_json(j.at("vertical"));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::CorruptFile, e.what());
  }
  if (rules.horizontal.empty() || rules.vertical.empty())
    throw Error(ErrorCode::CorruptFile, "pattern rule sets must be non-empty");
  return rules;
}

PatternRules load_patterns(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_patterns_json(buf.str());
}

Level builtin_exemplar(std::string_view domain) {
  if (domain == "cave") return parse_level(kCaveExemplar, "cave");
  if (domain == "mario") return parse_level(kMarioExemplar, "mario");
  if (domain == "supercat") return parse_level(kSupercatExemplar, "supercat");
  throw Error(ErrorCode::UnknownDomain, "no exemplar for '" + std::string(domain) + "'");
}

PatternRules builtin_patterns(std::string_view domain) { return extract_patterns(builtin_exemplar(domain)); }

}  // namespace levelrepair
