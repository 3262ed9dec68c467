#include <filesystem>

#include "levelrepair/level.hpp"
#include "levelrepair/rng.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace levelrepair;

TEST_CASE("parse small level") {
  Level lv = parse_level("{-}\nXXX");
  CHECK(lv.rows() == 2);
  CHECK(lv.cols() == 3);
  CHECK(lv.at(0, 0) == TileKind::Start);
  CHECK(lv.at(0, 1) == TileKind::Empty);
  CHECK(lv.at(0, 2) == TileKind::Goal);
  for (int c = 0; c < 3; ++c) CHECK(lv.at(1, c) == TileKind::Solid);
  CHECK(lv.start() == Cell{0, 0});
  CHECK(lv.goal() == Cell{0, 2});
}

TEST_CASE("parse square level and trailing newline") {
  Level lv = parse_level("{-\n-}\n");
  CHECK(lv.rows() == 2);
  CHECK(lv.start() == Cell{0, 0});
  CHECK(lv.goal() == Cell{1, 1});
}

TEST_CASE("parse errors") {
  CHECK_ERROR_CODE(parse_level("{a}"), ErrorCode::UnknownCharacter);
  CHECK_ERROR_CODE(parse_level("{-}\nXX"), ErrorCode::RaggedLines);
  CHECK_ERROR_CODE(parse_level("{--\nXXX"), ErrorCode::MissingOrDuplicateStartGoal);
  CHECK_ERROR_CODE(parse_level("{{}\nXXX"), ErrorCode::MissingOrDuplicateStartGoal);
  CHECK_ERROR_CODE(parse_level("{}}\n---"), ErrorCode::MissingOrDuplicateStartGoal);
}

TEST_CASE("serialize round trip") {
  const std::string text = "{-}\nXXX";
  CHECK(serialize_level(parse_level(text)) == text + "\n");
  CHECK(parse_level(serialize_level(parse_level(text))) == parse_level(text));

  Level walls = parse_level("XX{X\nXXXX\nX}XX");
  auto out = serialize_level(walls);
  CHECK(std::count(out.begin(), out.end(), '{') == 1);
  CHECK(std::count(out.begin(), out.end(), '}') == 1);
  CHECK(std::count(out.begin(), out.end(), 'X') == 10);
}

TEST_CASE("onehot channels") {
  Level lv = parse_level("{-}\nXXX");
  auto t = to_onehot(lv);
  CHECK(t.size() == 2u * 3u * 4u);
  CHECK(t.at(0, 1, 0) == 1.0);
  for (int ch = 1; ch < 4; ++ch) CHECK(t.at(0, 1, ch) == 0.0);
  CHECK(t.at(0, 2, 3) == 1.0);
  CHECK(t.at(0, 2, 0) == 0.0);
  CHECK(t.at(0, 0, 2) == 1.0);
  CHECK(t.at(1, 0, 1) == 1.0);
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 3; ++c) {
      double s = 0;
      for (int ch = 0; ch < 4; ++ch) s += t.at(r, c, ch);
      CHECK(s == 1.0);
    }
  CHECK(from_onehot(t) == lv);
}

TEST_CASE("from_onehot argmax and ties") {
  Level lv = parse_level("{-}\nXXX");
  auto t = to_onehot(lv);
  t.at(0, 1, 0) = 0.9;
  t.at(0, 1, 1) = 0.1;
  CHECK(from_onehot(t).at(0, 1) == TileKind::Empty);
  t.at(0, 1, 0) = 0.5;
  t.at(0, 1, 1) = 0.5;
  CHECK_ERROR_CODE(from_onehot(t), ErrorCode::AmbiguousCell);
}

TEST_CASE("onehot round trip on random levels") {
  Rng rng(7);
  for (int i = 0; i < 50; ++i) {
    Level lv = oracle::random_level(rng, 2 + static_cast<int>(rng.below(8)), 2 + static_cast<int>(rng.below(8)), 0.4);
    CHECK(from_onehot(to_onehot(lv)) == lv);
    CHECK(parse_level(serialize_level(lv)) == lv);
  }
}

TEST_CASE("diff_cells") {
  Level a = parse_level("{-X\n-X}");
  CHECK(diff_cells(a, a).empty());
  Level b = a.with_tile({0, 2}, TileKind::Empty);
  auto d = diff_cells(a, b);
  REQUIRE(d.size() == 1);
  CHECK(d[0].cell == Cell{0, 2});
  CHECK(d[0].from == TileKind::Solid);
  CHECK(d[0].to == TileKind::Empty);
  CHECK_ERROR_CODE(diff_cells(a, parse_level("{-}")), ErrorCode::DimensionMismatch);

  Rng rng(11);
  for (int i = 0; i < 30; ++i) {
    Level x = oracle::random_level(rng, 6, 6, 0.4);
    Level y = oracle::random_level(rng, 6, 6, 0.4);
    std::size_t expected = 0;
    for (int r = 0; r < 6; ++r)
      for (int c = 0; c < 6; ++c) expected += x.at(r, c) != y.at(r, c);
    CHECK(diff_cells(x, y).size() == expected);
  }
}

TEST_CASE("with_tile revalidates") {
  Level a = parse_level("{-}");
  CHECK_ERROR_CODE(a.with_tile({0, 1}, TileKind::Start), ErrorCode::MissingOrDuplicateStartGoal);
}

TEST_CASE("file round trip") {
  auto path = (std::filesystem::temp_directory_path() / "lr_level_test.txt").string();
  Level a = parse_level("{-X\n-X}");
  save_level(a, path);
  CHECK(load_level(path) == a);
  std::filesystem::remove(path);
  CHECK_ERROR_CODE(load_level(path), ErrorCode::Io);
}
