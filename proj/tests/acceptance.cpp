// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fail.
// Usage: acceptance [criterion numbers...]

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "levelrepair/exporters.hpp"
#include "levelrepair/pipeline.hpp"
#include "oracles.hpp"

using namespace levelrepair;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

// ------------------------------------------------------------ shared state

struct Trained {
  MlpModel model;
  double test_accuracy = 0;
  double seconds = 0;
  std::vector<DatasetItem> items;
  LabeledDataset split;
};

const Trained& trained_cave() {
  static std::optional<Trained> cache;
  if (cache) return *cache;
  auto t0 = Clock::now();
  Domain cave = builtin_domain("cave");
  GenConfig gcfg = gen_config_for(cave, GenMode::Constrained);
  gcfg.n_per_class = 1000;
  gcfg.seed = 1;
  Trained t;
  t.items = gen_dataset(cave, gcfg);
  t.split = split_dataset(to_examples(t.items), 0.8, 1);
  TrainConfig tcfg;  // lr 1e-2, weight decay 1e-3, 10 epochs
  tcfg.seed = 1;
  auto result = train(init_model(cave.rows, cave.cols, kDefaultHidden1, kDefaultHidden2, 1), t.split, tcfg);
  t.model = std::move(result.model);
  t.test_accuracy = evaluate(t.model, t.split.test);
  t.seconds = seconds_since(t0);
  cache = std::move(t);
  return *cache;
}

struct Experiment {
  std::vector<RepairOutcome> rows;
  int optimal = 0;
  int verified = 0;
  double seconds = 0;
};

const Experiment& cave_experiment() {
  static std::optional<Experiment> cache;
  if (cache) return *cache;
  const auto& tr = trained_cave();
  auto t0 = Clock::now();
  Domain cave = builtin_domain("cave");
  ExperimentConfig cfg = experiment_config_for(cave);
  cfg.n_levels = 100;
  cfg.seed = 7;
  cfg.repair.time_limit = 60.0;
  Experiment e;
  e.rows = run_experiment(cave, &tr.model, cfg, [&](const RepairRun& run, const Level&) {
    if (run.outcome.status != "Optimal") return;
    ++e.optimal;
    const Level& out = *run.repaired;
    if (check_solvable(out, cave.movement).solvable && oracle::reachable(out, cave.movement) &&
        check_patterns(out, cave.patterns).empty())
      ++e.verified;
  });
  e.seconds = seconds_since(t0);
  cache = std::move(e);
  return *cache;
}

// --------------------------------------------------------------- criteria

Verdict encoding_equivalence() {
  auto t0 = Clock::now();
  Rng rng(101);
  const int n = 500;
  int agree = 0;
  for (int trial = 0; trial < n; ++trial) {
    auto mp = oracle::random_mid_program(rng, 6);
    auto milp = oracle::milp_projection(mp);
    bool same = true;
    std::optional<double> best_bool, best_milp;
    for (std::uint64_t bits = 0; bits < milp.size(); ++bits) {
      auto b = oracle::boolean_cost(mp, bits);
      if (b.has_value() != milp[bits].has_value() || (b && std::abs(*b - *milp[bits]) > 1e-9)) same = false;
      if (b && (!best_bool || *b < *best_bool)) best_bool = b;
      if (milp[bits] && (!best_milp || *milp[bits] < *best_milp)) best_milp = milp[bits];
    }
    agree += same && best_bool == best_milp;
  }
  double s = seconds_since(t0);
  return {agree == n && s < 60, fmt("%.0f/%.0f programs agree, %.2f s", agree, n, s)};
}

ConstraintProgram random_row_program(Rng& rng, int max_vars) {
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
    double pick = lo + std::floor(rng.uniform() * (hi - lo + 1));
    switch (rng.below(3)) {
      case 0: row.lo = pick; break;
      case 1: row.hi = pick; break;
      default: row.lo = pick, row.hi = pick + std::floor(rng.uniform() * 3);
    }
    p.add_row(row);
  }
  for (int v = 0; v < n; ++v) p.set_weight(v, static_cast<double>(static_cast<int>(rng.below(11)) - 5));
  return p;
}

Verdict solver_exactness() {
  auto t0 = Clock::now();
  Rng rng(202);
  const int n = 200;
  int agree = 0;
  for (int trial = 0; trial < n; ++trial) {
    // alternate raw-row programs and mid-level ones, 12 variables at most
    ConstraintProgram p = trial % 2 ? random_row_program(rng, 12) : oracle::random_mid_program(rng, 6).prog;
    if (p.num_vars() > 12) {
      --trial;
      continue;
    }
    auto e = oracle::enumerate_program(p);
    SolverConfig cfg;
    cfg.branching = static_cast<Branching>(trial % 3);
    auto r = solve_bb(p, cfg);
    bool ok = e.feasible ? r.status == SolveStatus::Optimal && std::abs(*r.objective - e.best) < 1e-9
                         : r.status == SolveStatus::Infeasible;
    agree += ok;
  }
  double s = seconds_since(t0);
  return {agree == n && s < 120, fmt("%.0f/%.0f programs agree, %.2f s", agree, n, s)};
}

Verdict attribution_identities() {
  const auto& tr = trained_cave();
  auto t0 = Clock::now();
  const MlpModel& m = tr.model;
  Rng rng(303);
  double worst_ig = 0, worst_dl = 0;
  int ig_ok = 0, dl_ok = 0;
  for (int i = 0; i < 50; ++i) {
    // half held-out levels, half arbitrary relaxed inputs
    OneHotTensor x = tr.split.test[rng.below(tr.split.test.size())].input;
    if (i % 2) {
      for (auto& v : x.values) v = rng.uniform();
    }
    OneHotTensor base(x.rows, x.cols);
    double delta = logit(m, x) - logit(m, base);
    double ig = 0, dl = 0;
    for (double v : integrated_gradients_raw(m, x, 512, base).values) ig += v;
    for (double v : deeplift_rescale_raw(m, x, base).values) dl += v;
    double e_ig = std::abs(ig - delta), e_dl = std::abs(dl - delta);
    ig_ok += e_ig <= 1e-3 * std::abs(delta) + 1e-6;
    dl_ok += e_dl <= 1e-6;
    worst_ig = std::max(worst_ig, e_ig / (std::abs(delta) + 1e-12));
    worst_dl = std::max(worst_dl, e_dl);
  }

  // linear model: both methods reduce to w (x - x')
  double worst_lin = 0;
  Domain cave = builtin_domain("cave");
  for (int i = 0; i < 10; ++i) {
    auto lin = init_model({cave.rows * cave.cols * 4, 1}, 40 + i);
    lin.layers[0].b[0] = rng.uniform() - 0.5;
    Level lv = oracle::random_level(rng, cave.rows, cave.cols, 0.35);
    auto a = integrated_gradients(lin, lv, 64, zeros_like(lv));
    auto b = deeplift_rescale(lin, lv, zeros_like(lv));
    for (std::size_t k = 0; k < a.values.size(); ++k)
      worst_lin = std::max(worst_lin, std::abs(a.values[k] - b.values[k]));
  }

  // reverse-mode gradient against central differences, 50 random entries
  double worst_fd = 0;
  int fd_ok = 0;
  for (int i = 0; i < 50; ++i) {
    const auto& x = tr.split.test[rng.below(tr.split.test.size())].input;
    auto g = grad_logit(m, x.values);
    std::size_t k = rng.below(x.values.size());
    auto xp = x.values, xm = x.values;
    const double h = 1e-4;
    xp[k] += h;
    xm[k] -= h;
    double fd = (logit(m, xp) - logit(m, xm)) / (2 * h);
    double rel = std::abs(fd - g[k]) / std::max(std::abs(g[k]), 1e-9);
    fd_ok += std::abs(fd - g[k]) <= 1e-4 * std::max(std::abs(g[k]), 1e-9);
    worst_fd = std::max(worst_fd, std::abs(fd - g[k]) <= 1e-9 ? 0.0 : rel);
  }
  double s = seconds_since(t0);
  bool pass = ig_ok == 50 && dl_ok == 50 && worst_lin <= 1e-9 && fd_ok == 50 && s < 60;
  return {pass, fmt("IG worst rel %.2e, DeepLIFT worst %.2e, linear diff %.2e, ", worst_ig, worst_dl, worst_lin) +
                    fmt("FD worst rel %.2e, %.1f s", worst_fd, s)};
}

Verdict classifier_accuracy() {
  const auto& tr = trained_cave();
  return {tr.test_accuracy >= 0.90 && tr.seconds < 300,
          fmt("held-out accuracy %.4f on %.0f levels, %.1f s including generation", tr.test_accuracy,
              static_cast<double>(tr.split.test.size()), tr.seconds)};
}

Verdict weight_generation() {
  auto t0 = Clock::now();
  Rng rng(505);
  int ok = 0;
  for (int trial = 0; trial < 100; ++trial) {
    AttributionGrid g;
    g.rows = 4 + static_cast<int>(rng.below(12));
    g.cols = 4 + static_cast<int>(rng.below(12));
    for (int k = 0; k < g.rows * g.cols; ++k) g.values.push_back(std::tan(3.0 * (rng.uniform() - 0.5)));
    auto w = attributions_to_weights(g);

    double t = oracle::nearest_rank(g.values, 80);
    BinaryMap m{g.rows, g.cols, {}};
    for (double x : g.values) m.values.push_back(x >= t);
    auto comps = oracle::flood_components(m, 8);
    std::size_t best = 0;
    for (std::size_t k = 1; k < comps.size(); ++k)
      if (comps[k].size() > comps[best].size()) best = k;
    std::vector<int> expected(g.values.size(), 10);
    for (int cell : comps[best]) expected[cell] = 1;

    bool good = w.values == expected;
    for (int v : w.values) good = good && (v == 1 || v == 10);
    for (double c : {0.25, 3.0, 17.5}) {
      auto scaled = g;
      for (auto& x : scaled.values) x *= c;
      good = good && attributions_to_weights(scaled) == w;
    }
    ok += good;
  }
  double s = seconds_since(t0);
  return {ok == 100 && s < 10, fmt("%.0f/100 grids, %.3f s", ok, s)};
}

Verdict repair_soundness() {
  const auto& e = cave_experiment();
  const double frac = static_cast<double>(e.optimal) / static_cast<double>(e.rows.size());
  return {frac >= 0.95 && e.verified == e.optimal,
          fmt("%.0f/%.0f Optimal (%.1f%%), %.0f", e.optimal, static_cast<double>(e.rows.size()), 100 * frac,
              e.verified) +
              fmt(" verified by BFS and patterns, %.1f s", e.seconds)};
}

Verdict repair_optimality() {
  auto t0 = Clock::now();
  Domain cave = builtin_domain("cave");
  Rng rng(707);
  int agree = 0, infeasible = 0, n = 0;
  while (n < 30) {
    // unsolvable ones only, so every instance needs edits
    auto lv = sample_level(cave, 6, 6, rng.next(), 5000, 0.5);
    if (!lv || oracle::reachable(*lv, cave.movement)) continue;
    AttributionGrid g;
    g.rows = g.cols = 6;
    for (int k = 0; k < 36; ++k) g.values.push_back(rng.uniform());
    auto w = attributions_to_weights(g);
    auto expected = oracle::min_weighted_edit(*lv, w, cave.movement, cave.patterns);
    auto p = build_repair_problem(*lv, w, cave.movement, cave.patterns);
    SolverConfig cfg;
    cfg.branching = static_cast<Branching>(n % 3);
    auto r = solve_bb(p.program, cfg);
    bool ok;
    if (!expected) {
      ok = r.status == SolveStatus::Infeasible;
      ++infeasible;
    } else {
      ok = r.status == SolveStatus::Optimal && std::abs(*r.objective - *expected) < 1e-9;
    }
    agree += ok;
    ++n;
  }
  double s = seconds_since(t0);
  return {agree == 30 && s < 300, fmt("%.0f/30 agree (%.0f infeasible), %.2f s", agree, infeasible, s)};
}

Verdict change_statistics() {
  const auto& e = cave_experiment();
  ExperimentStats st = summarize(e.rows);
  bool pass = st.methods.size() == 3;
  std::string detail;
  for (const auto& m : st.methods) {
    pass = pass && m.changes.median >= 1 && m.changes.median <= 4;
    detail += m.method + " median " + fmt("%.1f", m.changes.median) + "  ";
  }
  return {pass, detail};
}

Verdict harness_shape() {
  const auto& e = cave_experiment();
  ExperimentStats st = summarize(e.rows);
  std::string table = render_stats(st);
  bool pass = table.find("| method | completed | mean | median | std |") != std::string::npos &&
              table.find("Repair time") != std::string::npos && table.find("Changes") != std::string::npos;
  auto series = emit_plot_data(e.rows);
  pass = pass && series.size() == 3;
  for (const auto& s : series)
    for (std::size_t i = 1; i < s.times.size(); ++i)
      pass = pass && s.times[i] >= s.times[i - 1] && s.repaired[i] >= s.repaired[i - 1];
  std::string detail;
  double uni = 0;
  for (const auto& m : st.methods)
    if (m.method == "UNI") uni = m.time.median;
  for (const auto& m : st.methods) {
    if (m.method == "UNI") continue;
    pass = pass && table.find(m.method + ": ") != std::string::npos;
    detail += m.method + fmt(" median %.4f s vs UNI %.4f s ", m.time.median, uni) +
              (m.time.median < uni ? "(faster)  " : "(not faster)  ");
  }
  return {pass, detail};
}

Verdict generation_soundness() {
  auto t0 = Clock::now();
  int generated = 0, rejected = 0;
  auto run = [&](const Domain& d, int rows, int cols, const GenerationOptions& opt, int count, std::uint64_t seed0) {
    for (int i = 0; i < count; ++i) {
      auto p = build_unsolvable_problem(rows, cols, d.movement, d.patterns, seed0 + i, opt);
      SolverConfig cfg;
      cfg.first_solution = true;
      cfg.time_limit = 20;
      auto r = solve_bb(p.program, cfg);
      if (!r.assignment) continue;
      ++generated;
      Level lv = decode_level(p.vars(), *r.assignment, d.name);
      rejected += !check_solvable(lv, d.movement).solvable && !oracle::reachable(lv, d.movement);
    }
  };
  Domain cave = builtin_domain("cave");
  run(cave, cave.rows, cave.cols, cave.generation, 100, 1000);
  run(cave, cave.rows, cave.cols, GenerationOptions{}, 50, 2000);
  for (const char* name : {"mario", "supercat"}) {
    Domain d = builtin_domain(name);
    run(d, d.rows, d.cols, d.generation, 10, 3000);
  }
  // the classifier dataset's unsolvable half came from the same builder
  for (const auto& it : trained_cave().items)
    if (!it.solvable) {
      ++generated;
      rejected += !oracle::reachable(it.level, cave.movement);
    }
  double s = seconds_since(t0);
  return {generated > 0 && rejected == generated,
          fmt("%.0f/%.0f generated levels rejected by the oracle, %.1f s", rejected, generated, s)};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
      {"encoding equivalence", encoding_equivalence},
      {"solver exactness", solver_exactness},
      {"attribution identities", attribution_identities},
      {"classifier accuracy", classifier_accuracy},
      {"weight generation", weight_generation},
      {"repair soundness", repair_soundness},
      {"repair optimality", repair_optimality},
      {"change statistics", change_statistics},
      {"harness shape", harness_shape},
      {"unsolvable generation soundness", generation_soundness},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));

  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && !only.count(id)) continue;
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    failed += !v.pass;
    std::printf("[%s] %2d %s: %s\n", v.pass ? "PASS" : "FAIL", id, criteria[i].first.c_str(), v.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
