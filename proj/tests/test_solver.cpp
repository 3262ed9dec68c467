#include <chrono>
#include <cmath>

#include "levelrepair/encode.hpp"
#include "levelrepair/solver.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace levelrepair;

namespace {

ConstraintProgram random_program(Rng& rng, int max_vars) {
  ConstraintProgram p;
  int n = 1 + static_cast<int>(rng.below(max_vars));
  for (int i = 0; i < n; ++i) p.make_var();
  int n_rows = static_cast<int>(rng.below(n + 3));
  for (int r = 0; r < n_rows; ++r) {
    Row row;
    double lo = 0, hi = 0;
    for (int v = 0; v < n; ++v) {
      if (rng.below(3) != 0) continue;
      double c = static_cast<double>(static_cast<int>(rng.below(7)) - 3);
      if (c == 0) continue;
      row.terms.push_back({static_cast<VarId>(v), c});
      (c < 0 ? lo : hi) += c;
    }
    double span = hi - lo;
    switch (rng.below(3)) {
      case 0: row.lo = lo + std::floor(rng.uniform() * (span + 1)); break;
      case 1: row.hi = lo + std::floor(rng.uniform() * (span + 1)); break;
      default:
        row.lo = lo + std::floor(rng.uniform() * (span + 1));
        row.hi = row.lo + std::floor(rng.uniform() * 3);
    }
    p.add_row(row);
  }
  for (int v = 0; v < n; ++v) p.set_weight(v, static_cast<double>(static_cast<int>(rng.below(11)) - 5));
  return p;
}

// n+1 pigeons into n holes: infeasible and exponential for plain branching.
ConstraintProgram pigeonhole(int holes) {
  ConstraintProgram p;
  const int pigeons = holes + 1;
  for (int i = 0; i < pigeons * holes; ++i) p.make_var();
  for (int i = 0; i < pigeons; ++i) {
    std::vector<Literal> l;
    for (int h = 0; h < holes; ++h) l.push_back(pos(i * holes + h));
    p.cnstr_count(l, 1, holes);
  }
  for (int h = 0; h < holes; ++h) {
    std::vector<Literal> l;
    for (int i = 0; i < pigeons; ++i) l.push_back(pos(i * holes + h));
    p.cnstr_count(l, 0, 1);
  }
  return p;
}

}  // namespace

TEST_CASE("small worked programs") {
  {
    ConstraintProgram p;
    auto x1 = p.make_var(), x2 = p.make_var();
    p.set_weight(x1, 1);
    p.set_weight(x2, 2);
    p.add_row({{{x1, 1}, {x2, 1}}, 1, kInf});
    auto r = solve_bb(p, {});
    REQUIRE(r.status == SolveStatus::Optimal);
    CHECK(*r.objective == 1.0);
    CHECK(*r.assignment == std::vector<std::uint8_t>{1, 0});
  }
  {
    ConstraintProgram p;
    auto i = p.make_var(), j = p.make_var();
    p.cnstr_implies_disj(pos(i), std::vector<Literal>{pos(j)});
    auto r = solve_bb(p, {});
    REQUIRE(r.status == SolveStatus::Optimal);
    CHECK(*r.objective == 0.0);
    CHECK((*r.assignment)[i] <= (*r.assignment)[j]);
  }
  {
    ConstraintProgram p;
    auto x = p.make_var();
    p.add_row({{{x, 1}}, 1, kInf});
    p.add_row({{{x, 1}}, -kInf, 0});
    auto r = solve_bb(p, {});
    CHECK(r.status == SolveStatus::Infeasible);
    CHECK_FALSE(r.assignment);
  }
  {
    ConstraintProgram empty;
    auto r = solve_bb(empty, {});
    CHECK(r.status == SolveStatus::Optimal);
    CHECK(*r.objective == 0.0);
  }
}

TEST_CASE("exactness against enumeration") {
  auto t0 = std::chrono::steady_clock::now();
  Rng rng(99);
  int agree = 0;
  const int n = 200;
  for (int trial = 0; trial < n; ++trial) {
    auto p = random_program(rng, 12);
    auto e = oracle::enumerate_program(p);
    bool ok = true;
    for (auto b : {Branching::MostConstrainedFirst, Branching::LowestWeightFirst, Branching::InputOrder}) {
      SolverConfig cfg;
      cfg.branching = b;
      cfg.seed = trial;
      auto r = solve_bb(p, cfg);
      if (e.feasible) {
        ok = ok && r.status == SolveStatus::Optimal && std::abs(*r.objective - e.best) < 1e-9 &&
             p.satisfies_rows(*r.assignment) && std::abs(p.objective(*r.assignment) - e.best) < 1e-9;
      } else {
        ok = ok && r.status == SolveStatus::Infeasible;
      }
    }
    agree += ok;
  }
  CHECK(agree == n);
  CHECK(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() < 120.0);
}

TEST_CASE("mid-level programs agree with enumeration") {
  Rng rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    auto mp = oracle::random_mid_program(rng);
    auto e = oracle::enumerate_program(mp.prog);
    auto r = solve_bb(mp.prog, {});
    if (!e.feasible) {
      CHECK(r.status == SolveStatus::Infeasible);
      continue;
    }
    REQUIRE(r.status == SolveStatus::Optimal);
    CHECK(*r.objective == doctest::Approx(e.best));
  }
}

TEST_CASE("limits and cancellation") {
  auto hard = pigeonhole(9);
  SolverConfig cfg;
  cfg.node_limit = 100;
  CHECK(solve_bb(hard, cfg).status == SolveStatus::Timeout);

  cfg.node_limit = 0;
  cfg.time_limit = 0.001;
  auto r = solve_bb(hard, cfg);
  CHECK(r.status == SolveStatus::Timeout);
  CHECK(r.wall_time < 1.0);

  std::stop_source stop;
  stop.request_stop();
  cfg.time_limit = 10;
  CHECK(solve_bb(hard, cfg, stop.get_token()).status == SolveStatus::Cancelled);

  auto small = pigeonhole(3);
  CHECK(solve_bb(small, {}).status == SolveStatus::Infeasible);

  SolverConfig first;
  first.first_solution = true;
  ConstraintProgram p;
  for (int i = 0; i < 4; ++i) p.make_var();
  p.cnstr_count(std::vector<Literal>{pos(0), pos(1), pos(2), pos(3)}, 2, 2);
  auto f = solve_bb(p, first);
  CHECK((f.status == SolveStatus::Feasible || f.status == SolveStatus::Optimal));
  CHECK(p.satisfies_rows(*f.assignment));
}

TEST_CASE("racing") {
  Rng rng(12);
  for (int trial = 0; trial < 20; ++trial) {
    auto p = random_program(rng, 10);
    SolverConfig one;
    one.branching = Branching::MostConstrainedFirst;
    auto direct = solve_bb(p, one);
    std::vector<SolverConfig> single{one};
    auto raced = race(p, single, 60);
    CHECK(raced.status == direct.status);
    CHECK(raced.objective == direct.objective);
    CHECK(raced.assignment == direct.assignment);

    auto configs = default_race_configs(60, trial);
    std::vector<SolveResult> all;
    auto w = race(p, configs, 60, &all);
    CHECK(all.size() == configs.size());
    CHECK(w.status == direct.status);
    if (direct.objective) CHECK(*w.objective == doctest::Approx(*direct.objective));
    for (const auto& c : configs) {
      auto seq = solve_bb(p, c);
      CHECK(seq.status == direct.status);
      if (seq.objective) CHECK(*seq.objective == doctest::Approx(*direct.objective));
    }
  }
  auto hard = pigeonhole(10);
  auto configs = default_race_configs(10);
  auto r = race(hard, configs, 0.001);
  CHECK(r.status == SolveStatus::Timeout);
}

TEST_CASE("lazy programs need the oracle") {
  auto p = build_repair_problem(parse_level("{X}"), uniform_weights(1, 3, 1), builtin_template("cave"),
                                oracle::permissive_rules());
  SolverConfig cfg;
  cfg.use_lazy_oracle = false;
  CHECK_ERROR_CODE(solve_bb(p.program, cfg), ErrorCode::MalformedProgram);
  auto r = solve_bb(p.program, {});
  REQUIRE(r.status == SolveStatus::Optimal);
  CHECK(*r.objective == 1.0);
}

TEST_CASE("names and log") {
  for (auto b : {Branching::MostConstrainedFirst, Branching::LowestWeightFirst, Branching::InputOrder})
    CHECK(parse_branching(to_string(b)) == b);
  for (auto s : {SolveStatus::Optimal, SolveStatus::Infeasible, SolveStatus::Timeout, SolveStatus::Feasible,
                 SolveStatus::Cancelled})
    CHECK(parse_solve_status(to_string(s)) == s);
  CHECK_ERROR_CODE(parse_branching("random"), ErrorCode::InvalidArgument);
  SolveResult r;
  r.config_id = "a";
  r.status = SolveStatus::Optimal;
  r.objective = 2.0;
  std::vector<SolveResult> v{r};
  auto csv = solver_log_csv(v);
  CHECK(csv.rfind("config_id,status,objective,nodes,wall_time_s\n", 0) == 0);
  CHECK(csv.find("a,Optimal,") != std::string::npos);
}
