#include <chrono>
#include <set>

#include "levelrepair/encode.hpp"
#include "levelrepair/solver.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace levelrepair;

namespace {

// All 0-1 points of `prog` that satisfy its rows.
std::set<std::vector<std::uint8_t>> feasible_points(const ConstraintProgram& prog) {
  std::set<std::vector<std::uint8_t>> out;
  const std::size_t n = prog.num_vars();
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << n); ++mask) {
    std::vector<std::uint8_t> x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = (mask >> i) & 1;
    bool ok = true;
    for (const auto& r : prog.rows()) ok = ok && oracle::row_holds(r, x);
    if (ok) out.insert(x);
  }
  return out;
}

std::optional<double> optimum(const ConstraintProgram& prog) {
  auto e = oracle::enumerate_program(prog);
  if (!e.feasible) return std::nullopt;
  return e.best;
}

SolveResult solve(const EncodedProblem& p, Branching b = Branching::LowestWeightFirst) {
  SolverConfig cfg;
  cfg.branching = b;
  cfg.time_limit = 30;
  return solve_bb(p.program, cfg);
}

}  // namespace

TEST_CASE("make_var and polarity helpers") {
  ConstraintProgram p;
  auto a = p.make_var(), b = p.make_var();
  CHECK(a != b);
  std::vector<Literal> l{pos(0), neg(1)};
  auto e = polarity_sum(l);
  CHECK(e.terms == std::vector<Term>{{0, 1.0}, {1, -1.0}});
  CHECK(negativity_count(l) == 1);
  CHECK(polarity_sum(std::vector<Literal>{}).terms.empty());
  auto dbl = polarity_sum(std::vector<Literal>{neg(0), neg(0)});
  double coef = 0;
  for (auto t : dbl.terms) coef += t.var == 0 ? t.coef : 0;
  CHECK(coef == -2.0);
  CHECK(negativity_count(std::vector<Literal>{pos(0), pos(1)}) == 0);
  CHECK(negativity_count(std::vector<Literal>{neg(0), neg(1), neg(0)}) == 3);
}

TEST_CASE("make_conj truth tables") {
  {
    ConstraintProgram p;
    auto i = p.make_var();
    auto k = p.make_conj(std::vector<Literal>{pos(i)});
    for (const auto& x : feasible_points(p)) CHECK(x[k.var] == x[i]);
    CHECK(feasible_points(p).size() == 2);
  }
  {
    ConstraintProgram p;
    auto i = p.make_var(), j = p.make_var();
    auto k = p.make_conj(std::vector<Literal>{pos(i), neg(j)});
    auto pts = feasible_points(p);
    CHECK(pts.size() == 4);
    for (const auto& x : pts) CHECK(x[k.var] == (x[i] == 1 && x[j] == 0));
  }
  {
    ConstraintProgram p;
    for (int v = 0; v < 3; ++v) p.make_var();
    auto k = p.make_conj(std::vector<Literal>{pos(0), pos(1), pos(2)});
    auto pts = feasible_points(p);
    CHECK(pts.size() == 8);
    for (const auto& x : pts) CHECK(x[k.var] == (x[0] & x[1] & x[2]));
  }
  ConstraintProgram p;
  CHECK_ERROR_CODE(p.make_conj(std::vector<Literal>{}), ErrorCode::EmptyConjunction);
  CHECK_ERROR_CODE(p.make_conj(std::vector<Literal>{pos(3)}), ErrorCode::MalformedProgram);
}

TEST_CASE("implications") {
  {
    ConstraintProgram p;
    auto i = p.make_var(), j = p.make_var();
    p.cnstr_implies_disj(pos(i), std::vector<Literal>{pos(j)});
    auto pts = feasible_points(p);
    CHECK(pts.size() == 3);
    CHECK_FALSE(pts.count({1, 0}));
  }
  {
    ConstraintProgram p;
    auto i = p.make_var(), j = p.make_var();
    p.cnstr_implies_disj(pos(i), std::vector<Literal>{pos(j)}, 5.0);
    REQUIRE(p.num_vars() == 3);
    CHECK(p.weighting_vars().size() == 1);
    auto w = p.weighting_vars()[0];
    for (const auto& x : feasible_points(p))
      if (x[i] == 1 && x[j] == 0) CHECK(x[w] == 1);
    p.add_row({{{i, 1.0}}, 1, 1});
    p.add_row({{{j, 1.0}}, 0, 0});
    CHECK(optimum(p) == 5.0);
  }
  {
    ConstraintProgram p;
    auto i = p.make_var(), j = p.make_var();
    p.cnstr_implies_disj(neg(i), std::vector<Literal>{neg(j)});
    auto pts = feasible_points(p);
    CHECK(pts.size() == 3);
    CHECK_FALSE(pts.count({0, 1}));
  }
  ConstraintProgram p;
  p.make_var();
  CHECK_ERROR_CODE(p.cnstr_implies_disj(pos(0), std::vector<Literal>{}), ErrorCode::EmptyDisjunction);
  CHECK_ERROR_CODE(p.cnstr_implies_disj(pos(0), std::vector<Literal>{pos(0)}, 0.0), ErrorCode::NonPositiveWeight);
}

TEST_CASE("counts") {
  {
    ConstraintProgram p;
    for (int v = 0; v < 3; ++v) p.make_var();
    p.cnstr_count(std::vector<Literal>{pos(0), neg(1), pos(2)}, 0, 3);
    CHECK(feasible_points(p).size() == 8);
  }
  {
    ConstraintProgram p;
    for (int v = 0; v < 3; ++v) p.make_var();
    p.cnstr_count(std::vector<Literal>{pos(0), pos(1), pos(2)}, 3, 3);
    auto pts = feasible_points(p);
    REQUIRE(pts.size() == 1);
    CHECK(*pts.begin() == std::vector<std::uint8_t>{1, 1, 1});
  }
  {
    ConstraintProgram p;
    for (int v = 0; v < 3; ++v) p.make_var();
    p.cnstr_count(std::vector<Literal>{pos(0), neg(1), pos(2)}, 1, 2);
    auto pts = feasible_points(p);
    int expected = 0;
    for (int m = 0; m < 8; ++m) {
      int k = (m & 1) + !((m >> 1) & 1) + ((m >> 2) & 1);
      bool in = k >= 1 && k <= 2;
      expected += in;
      CHECK(pts.count({std::uint8_t(m & 1), std::uint8_t((m >> 1) & 1), std::uint8_t((m >> 2) & 1)}) == in);
    }
    CHECK(pts.size() == static_cast<std::size_t>(expected));
  }
  ConstraintProgram p;
  p.make_var();
  CHECK_ERROR_CODE(p.cnstr_count(std::vector<Literal>{pos(0)}, 2, 1), ErrorCode::BadBounds);
  CHECK_ERROR_CODE(p.cnstr_count(std::vector<Literal>{pos(0)}, 0, 2), ErrorCode::BadBounds);
}

TEST_CASE("encoding equivalence on random mid-level programs") {
  auto t0 = std::chrono::steady_clock::now();
  Rng rng(2024);
  int agree = 0;
  const int n = 500;
  for (int trial = 0; trial < n; ++trial) {
    auto mp = oracle::random_mid_program(rng);
    auto milp = oracle::milp_projection(mp);
    bool same = true;
    std::optional<double> best_bool, best_milp;
    for (std::uint64_t bits = 0; bits < milp.size(); ++bits) {
      auto b = oracle::boolean_cost(mp, bits);
      if (b.has_value() != milp[bits].has_value() || (b && std::abs(*b - *milp[bits]) > 1e-9)) same = false;
      if (b && (!best_bool || *b < *best_bool)) best_bool = b;
      if (milp[bits] && (!best_milp || *milp[bits] < *best_milp)) best_milp = milp[bits];
    }
    same = same && best_bool == best_milp;
    agree += same;
  }
  CHECK(agree == n);
  CHECK(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() < 60.0);
}

TEST_CASE("repair builder on small levels") {
  auto cave = builtin_template("cave");
  auto open = oracle::permissive_rules();

  SUBCASE("solvable level needs no change") {
    Level lv = parse_level("{--\n-X-\n--}");
    auto p = build_repair_problem(lv, uniform_weights(3, 3, 1), cave, open);
    auto r = solve(p);
    REQUIRE(r.status == SolveStatus::Optimal);
    CHECK(*r.objective == 0.0);
    CHECK(decode_level(p.vars(), *r.assignment) == lv);
  }
  SUBCASE("sealed goal, uniform weights") {
    Level lv = parse_level("{-X\n--X\n-X}");
    CHECK_FALSE(check_solvable(lv, cave).solvable);
    auto p = build_repair_problem(lv, uniform_weights(3, 3, 1), cave, open);
    auto r = solve(p);
    REQUIRE(r.status == SolveStatus::Optimal);
    CHECK(*r.objective == 1.0);
    Level out = decode_level(p.vars(), *r.assignment);
    CHECK(diff_cells(lv, out).size() == 1);
    CHECK(check_solvable(out, cave).solvable);
    // brute force over single-cell edits agrees that one change suffices
    int fixes = 0;
    for (int r2 = 0; r2 < 3; ++r2)
      for (int c = 0; c < 3; ++c) {
        auto k = lv.at(r2, c);
        if (k == TileKind::Start || k == TileKind::Goal) continue;
        auto e = lv.with_tile({r2, c}, k == TileKind::Solid ? TileKind::Empty : TileKind::Solid);
        fixes += oracle::reachable(e, cave);
      }
    CHECK(fixes == 2);
  }
  SUBCASE("sealed goal, cheap sealing cell") {
    Level lv = parse_level("{-X\n--X\n-X}");
    auto w = uniform_weights(3, 3, 10);
    w.values[1 * 3 + 2] = 1;
    auto p = build_repair_problem(lv, w, cave, open);
    auto r = solve(p);
    REQUIRE(r.status == SolveStatus::Optimal);
    CHECK(*r.objective == 1.0);
    auto d = diff_cells(lv, decode_level(p.vars(), *r.assignment));
    REQUIRE(d.size() == 1);
    CHECK(d[0].cell == Cell{1, 2});
  }
  SUBCASE("layered and lazy encodings agree with exhaustive search") {
    Rng rng(8);
    auto rules = builtin_patterns("cave");
    for (int trial = 0; trial < 8; ++trial) {
      Level lv = oracle::random_level(rng, 4, 4, 0.45);
      WeightGrid w = uniform_weights(4, 4, 1);
      for (auto& x : w.values) x = rng.below(3) == 0 ? 1 : 10;
      auto expected = oracle::min_weighted_edit(lv, w, cave, rules);
      for (auto enc : {ReachEncoding::Lazy, ReachEncoding::Layered}) {
        RepairOptions opt;
        opt.encoding = enc;
        auto p = build_repair_problem(lv, w, cave, rules, opt);
        SolverConfig cfg;
        cfg.use_lazy_oracle = enc == ReachEncoding::Lazy;
        auto r = solve_bb(p.program, cfg);
        if (!expected) {
          CHECK(r.status == SolveStatus::Infeasible);
          continue;
        }
        REQUIRE(r.status == SolveStatus::Optimal);
        CHECK(*r.objective == doctest::Approx(*expected));
        Level out = decode_level(p.vars(), *r.assignment);
        CHECK(oracle::reachable(out, cave));
        CHECK(oracle::conforms(out, rules));
      }
    }
  }
  CHECK_ERROR_CODE(build_repair_problem(parse_level("{-}"), uniform_weights(2, 2, 1), cave, open),
                   ErrorCode::DimensionMismatch);
  CHECK_ERROR_CODE(build_repair_problem(parse_level("{-}"), uniform_weights(1, 3, 0), cave, open),
                   ErrorCode::NonPositiveWeight);
}

TEST_CASE("unsolvable builder") {
  auto cave = builtin_template("cave");
  auto open = oracle::permissive_rules();
  SUBCASE("adjacent endpoints cannot be separated") {
    auto p = build_unsolvable_problem(1, 2, cave, open, 1);
    CHECK(solve(p).status == SolveStatus::Infeasible);
  }
  SUBCASE("outputs are unsolvable and diverse") {
    auto rules = builtin_patterns("cave");
    std::set<std::string> seen;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      auto p = build_unsolvable_problem(6, 6, cave, rules, seed);
      SolverConfig cfg;
      cfg.first_solution = true;
      auto r = solve_bb(p.program, cfg);
      REQUIRE(r.assignment);
      Level lv = decode_level(p.vars(), *r.assignment);
      CHECK_FALSE(check_solvable(lv, cave).solvable);
      CHECK_FALSE(oracle::reachable(lv, cave));
      CHECK(oracle::conforms(lv, rules));
      seen.insert(serialize_level(lv));
    }
    CHECK(seen.size() >= 18);
  }
  SUBCASE("endpoint regions and pocket cap") {
    auto rules = builtin_patterns("cave");
    GenerationOptions opt{true, 0.1, 3, 8};
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      auto p = build_unsolvable_problem(8, 8, cave, rules, seed, opt);
      SolverConfig cfg;
      cfg.first_solution = true;
      auto r = solve_bb(p.program, cfg);
      REQUIRE(r.assignment);
      Level lv = decode_level(p.vars(), *r.assignment);
      CHECK(lv.start().row < 3);
      CHECK(lv.start().col < 3);
      CHECK(lv.goal().row >= 5);
      CHECK(lv.goal().col >= 5);
      CHECK_FALSE(oracle::reachable(lv, cave));
    }
  }
}
