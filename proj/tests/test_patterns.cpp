#include <string>

#include "levelrepair/patterns.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace levelrepair;
using K = TileKind;

TEST_CASE("all-empty exemplar") {
  auto rules = extract_patterns(parse_level("----\n-{}-\n----"));
  CHECK(rules.horizontal.count({K::Empty, K::Empty}));
  CHECK(rules.vertical.count({K::Empty, K::Empty}));
}

TEST_CASE("exemplar pairs by hand") {
  auto rules = extract_patterns(parse_level("{-}\nXXX"));
  std::set<TilePair> h{{K::Start, K::Empty}, {K::Empty, K::Goal}, {K::Solid, K::Solid}};
  std::set<TilePair> v{{K::Start, K::Solid}, {K::Empty, K::Solid}, {K::Goal, K::Solid}};
  CHECK(rules.horizontal == h);
  CHECK(rules.vertical == v);
}

TEST_CASE("self consistency and single violation") {
  for (const char* dom : {"cave", "mario", "supercat"}) {
    auto ex = builtin_exemplar(dom);
    auto rules = builtin_patterns(dom);
    CHECK(check_patterns(ex, rules).empty());
    CHECK(rules == extract_patterns(ex));
    CHECK(load_patterns(std::string(LEVELREPAIR_DATA_DIR) + "/patterns/" + dom + ".json") == rules);
  }
  auto rules = extract_patterns(parse_level("{-}\nXXX"));
  Level bad = parse_level("{-}\nX-X");
  auto v = check_patterns(bad, rules);
  // (X,-) and (-,X) horizontally, (-,-) vertically under the Empty cell
  CHECK(v.size() == 3);
  Level one = parse_level("{-}\n-XX");
  auto v1 = check_patterns(one, rules);
  REQUIRE(v1.size() == 2);  // (-,X) across and ({,-) down
  CHECK(v1[0].first == Cell{0, 0});
  CHECK_FALSE(v1[0].horizontal);
  Level flip = parse_level("{X}\nXXX");
  auto v2 = check_patterns(flip, rules);
  // (S,X), (X,G) horizontal and (X,X) vertical under column 1
  CHECK(v2.size() == 3);
}

TEST_CASE("patterns agree with oracle check") {
  auto rules = builtin_patterns("cave");
  Rng rng(5);
  for (int i = 0; i < 100; ++i) {
    Level lv = oracle::random_level(rng, 5, 5, 0.3);
    CHECK(check_patterns(lv, rules).empty() == oracle::conforms(lv, rules));
  }
}

TEST_CASE("pattern json") {
  auto rules = builtin_patterns("mario");
  CHECK(parse_patterns_json(patterns_to_json(rules)) == rules);
  CHECK_ERROR_CODE(parse_patterns_json("{}"), ErrorCode::CorruptFile);
  CHECK_ERROR_CODE(builtin_exemplar("pacman"), ErrorCode::UnknownDomain);
}
