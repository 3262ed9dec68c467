#include "levelrepair/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <mutex>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "levelrepair/error.hpp"
#include "levelrepair/io.hpp"
#include "levelrepair/rng.hpp"

namespace levelrepair {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string shortest(double v) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::vector<std::string> split(std::string_view line, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    out.emplace_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

double parse_double(const std::string& s, const char* what) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw Error(ErrorCode::CorruptFile, std::string("bad ") + what + " '" + s + "'");
  return v;
}

constexpr std::string_view kOutcomesHeader =
    "level_id,method,status,wall_time_s,attribution_time_s,changes,objective,winning_config";

}  // namespace

Domain builtin_domain(std::string_view name) {
  Domain d;
  d.name = std::string(name);
  d.movement = builtin_template(name);
  d.patterns = builtin_patterns(name);
  const Level exemplar = builtin_exemplar(name);
  d.rows = exemplar.rows();
  d.cols = exemplar.cols();
  // Sparse caves with endpoints in opposite corners; unsolvable levels seal
  // one endpoint in a pocket of at most 8 cells.
  if (d.name == "cave") d.generation = {true, 0.1, 3, 8};
  else d.generation = {true, 0.3, 0, 0};
  return d;
}

GenConfig gen_config_for(const Domain& domain, GenMode mode) {
  GenConfig cfg;
  cfg.mode = mode;
  if (mode == GenMode::Constrained) {
    cfg.solid_density = domain.generation.solid_density;
    cfg.endpoint_region = domain.generation.endpoint_region;
    cfg.pocket_limit = domain.generation.pocket_limit;
  }
  return cfg;
}

ExperimentConfig experiment_config_for(const Domain& domain) {
  ExperimentConfig cfg;
  cfg.solid_density = domain.generation.solid_density;
  cfg.endpoint_region = domain.generation.endpoint_region;
  cfg.pocket_limit = domain.generation.pocket_limit;
  return cfg;
}

std::string_view to_string(GenMode mode) { return mode == GenMode::Sampled ? "sampled" : "constrained"; }

GenMode parse_gen_mode(std::string_view name) {
  if (name == "sampled") return GenMode::Sampled;
  if (name == "constrained") return GenMode::Constrained;
  throw Error(ErrorCode::InvalidArgument, "unknown generation mode '" + std::string(name) + "'");
}

std::optional<Level> sample_level(const Domain& domain, int rows, int cols, std::uint64_t seed, int attempts,
                                  double solid_density, int endpoint_region) {
  if (rows < 1 || cols < 1 || rows * cols < 2) throw Error(ErrorCode::InvalidArgument, "grid too small");
  const int region = endpoint_region;
  if (region < 0 || region > rows || region > cols || (region > 0 && rows * cols == 1))
    throw Error(ErrorCode::InvalidArgument, "endpoint region does not fit the grid");
  Rng rng(seed);
  const std::size_t n = static_cast<std::size_t>(rows) * cols;
  for (int attempt = 0; attempt < attempts; ++attempt) {
    std::vector<TileKind> cells(n);
    for (auto& c : cells) c = rng.uniform() < solid_density ? TileKind::Solid : TileKind::Empty;
    std::size_t start = 0;
    std::size_t goal = 0;
    if (region > 0) {
      start = rng.below(region) * cols + rng.below(region);
      goal = (rows - 1 - rng.below(region)) * cols + (cols - 1 - rng.below(region));
      if (goal == start) continue;
    } else {
      start = rng.below(n);
      goal = rng.below(n - 1);
      if (goal >= start) ++goal;
    }
    cells[start] = TileKind::Start;
    cells[goal] = TileKind::Goal;
    Level level(rows, cols, std::move(cells), domain.name);
    if (check_patterns(level, domain.patterns).empty()) return level;
  }
  return std::nullopt;
}

std::optional<Level> generate_constrained(const Domain& domain, int rows, int cols, std::uint64_t seed,
                                          const GenerationOptions& options, double time_limit) {
  const bool unsolvable = options.require_unreachable;
  auto problem = build_unsolvable_problem(rows, cols, domain.movement, domain.patterns, seed, options);
  SolverConfig cfg;
  cfg.id = "gen";
  cfg.first_solution = true;
  cfg.seed = seed;
  cfg.time_limit = time_limit;
  const auto result = solve_bb(problem.program, cfg);
  if (!result.assignment) return std::nullopt;
  Level level = decode_level(problem.vars(), *result.assignment, domain.name);
  if (check_solvable(level, domain.movement).solvable == unsolvable) return std::nullopt;
  return level;
}

std::vector<DatasetItem> gen_dataset(const Domain& domain, const GenConfig& cfg) {
  if (cfg.n_per_class < 1) throw Error(ErrorCode::InvalidArgument, "need at least one level per class");
  const int rows = cfg.rows > 0 ? cfg.rows : domain.rows;
  const int cols = cfg.cols > 0 ? cfg.cols : domain.cols;
  std::vector<DatasetItem> solvable, unsolvable;
  Rng seeds(cfg.seed);
  const long long budget = static_cast<long long>(cfg.attempts_per_level) * 2 * cfg.n_per_class;
  const auto quota = static_cast<std::size_t>(cfg.n_per_class);

  for (long long attempt = 0; attempt < budget; ++attempt) {
    if (solvable.size() >= quota && unsolvable.size() >= quota) break;
    const std::uint64_t seed = seeds.next();
    std::optional<Level> level;
    if (cfg.mode == GenMode::Sampled) {
      level = sample_level(domain, rows, cols, seed, 1, cfg.solid_density, cfg.endpoint_region);
    } else {
      // Alternate between the two builders while both quotas are open.
      const bool want_unsolvable =
          solvable.size() >= quota || (unsolvable.size() < quota && unsolvable.size() <= solvable.size());
      const GenerationOptions opts{want_unsolvable, cfg.solid_density, cfg.endpoint_region, cfg.pocket_limit};
      level = generate_constrained(domain, rows, cols, seed, opts, cfg.solve_time_limit);
    }
    if (!level) continue;
    const bool ok = check_solvable(*level, domain.movement).solvable;
    auto& bucket = ok ? solvable : unsolvable;
    if (bucket.size() < quota) bucket.push_back({std::move(*level), ok, seed});
  }
  if (solvable.size() < quota || unsolvable.size() < quota)
    throw Error(ErrorCode::QuotaUnreachable, "filled " + std::to_string(solvable.size()) + " solvable and " +
                                                 std::to_string(unsolvable.size()) + " unsolvable of " +
                                                 std::to_string(quota) + " each");
  solvable.insert(solvable.end(), std::make_move_iterator(unsolvable.begin()),
                  std::make_move_iterator(unsolvable.end()));
  return solvable;
}

std::string dataset_jsonl(const std::vector<DatasetItem>& items) {
  std::string out;
  for (const auto& item : items) {
    nlohmann::json j{{"text", serialize_level(item.level)},
                     {"solvable", item.solvable},
                     {"domain", item.level.domain()},
                     {"seed", item.seed}};
    out += j.dump() + '\n';
  }
  return out;
}

std::vector<DatasetItem> parse_dataset_jsonl(std::string_view text) {
  std::vector<DatasetItem> items;
  std::size_t line_no = 0;
  for (const auto& line : split(text, '\n')) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      items.push_back({parse_level(j.at("text").get<std::string>(), j.value("domain", "custom")),
                       j.at("solvable").get<bool>(), j.value<std::uint64_t>("seed", 0)});
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::CorruptFile, "dataset line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return items;
}

void save_dataset(const std::vector<DatasetItem>& items, const std::string& path) {
  write_text_file(path, dataset_jsonl(items));
}

std::vector<DatasetItem> load_dataset(const std::string& path) { return parse_dataset_jsonl(read_text_file(path)); }

std::vector<LabeledExample> to_examples(const std::vector<DatasetItem>& items) {
  std::vector<LabeledExample> out;
  out.reserve(items.size());
  for (const auto& item : items) out.push_back({to_onehot(item.level), item.solvable ? 0 : 1});
  return out;
}

RepairRun repair_level(const Level& level, AttributionMethod method, const MlpModel* model, const Domain& domain,
                       const RepairConfig& cfg, std::string level_id) {
  const auto t0 = Clock::now();
  RepairRun run;
  run.outcome.level_id = std::move(level_id);
  run.outcome.method = std::string(to_string(method));

  if (method == AttributionMethod::Uniform) {
    run.attribution = uniform_attribution(level);
  } else {
    if (!model) throw Error(ErrorCode::InvalidArgument, "attribution method needs a trained model");
    const auto ta = Clock::now();
    run.attribution = attribute(method, model, level, cfg.ig_steps);
    run.outcome.attribution_time_s = seconds_since(ta);
  }
  run.weights = attributions_to_weights(run.attribution, cfg.weights);

  const auto problem = build_repair_problem(level, run.weights, domain.movement, domain.patterns, cfg.encoding);
  const auto configs = cfg.solvers.empty() ? default_race_configs(cfg.time_limit) : cfg.solvers;
  const auto result = race(problem.program, configs, cfg.time_limit, &run.solver_results);

  run.outcome.status = std::string(to_string(result.status));
  if (result.conclusive()) run.outcome.winning_config = result.config_id;
  if (result.status == SolveStatus::Optimal && result.assignment) {
    Level repaired = decode_level(problem.vars(), *result.assignment, level.domain());
    if (!check_solvable(repaired, domain.movement).solvable)
      throw std::logic_error("repaired level " + run.outcome.level_id + " fails the reachability check");
    if (!check_patterns(repaired, domain.patterns).empty())
      throw std::logic_error("repaired level " + run.outcome.level_id + " violates the pattern rules");
    run.outcome.changes = static_cast<int>(diff_cells(level, repaired).size());
    run.outcome.objective = result.objective;
    run.repaired = std::move(repaired);
  }
  run.outcome.wall_time_s = seconds_since(t0);
  return run;
}

void require_repaired(const RepairOutcome& outcome) {
  if (outcome.status == "Optimal") return;
  if (outcome.status == "Infeasible")
    throw Error(ErrorCode::InfeasibleRepair, "no solvable pattern-conforming repair of " + outcome.level_id);
  throw Error(ErrorCode::RepairTimeout, "repair of " + outcome.level_id + " ended with status " + outcome.status);
}

std::vector<Level> experiment_levels(const Domain& domain, const ExperimentConfig& cfg) {
  constexpr int kAttempts = 200;
  Rng seeds(cfg.seed);
  std::vector<Level> levels;
  for (int i = 0; i < cfg.n_levels; ++i) {
    std::optional<Level> level;
    for (int attempt = 0; attempt < kAttempts && !level; ++attempt) {
      const auto seed = seeds.next();
      if (cfg.level_source == GenMode::Constrained) {
        const GenerationOptions opts{true, cfg.solid_density, cfg.endpoint_region, cfg.pocket_limit};
        level = generate_constrained(domain, domain.rows, domain.cols, seed, opts, 10.0);
      } else {
        level = sample_level(domain, domain.rows, domain.cols, seed, 1, cfg.solid_density, cfg.endpoint_region);
        if (level && check_solvable(*level, domain.movement).solvable) level.reset();
      }
    }
    if (!level) throw Error(ErrorCode::QuotaUnreachable, "could not generate experiment level " + std::to_string(i));
    levels.push_back(std::move(*level));
  }
  return levels;
}

std::vector<RepairOutcome> run_experiment(const Domain& domain, const MlpModel* model, const ExperimentConfig& cfg,
                                          const OutcomeCallback& on_outcome) {
  const auto levels = experiment_levels(domain, cfg);
  const std::size_t per_level = cfg.methods.size();
  std::vector<RepairOutcome> rows(levels.size() * per_level);
  std::mutex report_mutex;
  std::vector<std::exception_ptr> errors(levels.size());

  auto process = [&](std::size_t i) {
    char id[32];
    std::snprintf(id, sizeof id, "L%04zu", i);
    for (std::size_t m = 0; m < per_level; ++m) {
      auto run = repair_level(levels[i], cfg.methods[m], model, domain, cfg.repair, id);
      rows[i * per_level + m] = run.outcome;
      if (on_outcome) {
        std::lock_guard lock(report_mutex);
        on_outcome(run, levels[i]);
      }
    }
  };

  const int workers = std::max(1, cfg.parallel_levels);
  if (workers == 1) {
    for (std::size_t i = 0; i < levels.size(); ++i) process(i);
    return rows;
  }
  std::atomic<std::size_t> next{0};
  {
    std::vector<std::jthread> pool;
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < levels.size(); i = next++) {
          try {
            process(i);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
    }
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  return rows;
}

std::string outcomes_csv(const std::vector<RepairOutcome>& rows) {
  std::string out(kOutcomesHeader);
  out += '\n';
  for (const auto& r : rows) {
    out += r.level_id + ',' + r.method + ',' + r.status + ',' + fixed(r.wall_time_s, 6) + ',' +
           fixed(r.attribution_time_s, 6) + ',' + std::to_string(r.changes) + ',' +
           (r.objective ? shortest(*r.objective) : std::string()) + ',' + r.winning_config + '\n';
  }
  return out;
}

std::vector<RepairOutcome> parse_outcomes_csv(std::string_view text) {
  auto lines = split(text, '\n');
  for (auto& l : lines)
    if (!l.empty() && l.back() == '\r') l.pop_back();
  if (lines.empty() || lines.front() != kOutcomesHeader)
    throw Error(ErrorCode::CorruptFile, "outcomes file does not start with the expected header");
  std::vector<RepairOutcome> rows;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const auto f = split(lines[i], ',');
    if (f.size() != 8) throw Error(ErrorCode::CorruptFile, "outcomes line " + std::to_string(i + 1) + " needs 8 fields");
    RepairOutcome r;
    r.level_id = f[0];
    r.method = f[1];
    r.status = f[2];
    r.wall_time_s = parse_double(f[3], "wall time");
    r.attribution_time_s = parse_double(f[4], "attribution time");
    r.changes = static_cast<int>(parse_double(f[5], "change count"));
    if (!f[6].empty()) r.objective = parse_double(f[6], "objective");
    r.winning_config = f[7];
    rows.push_back(std::move(r));
  }
  return rows;
}

SummaryStats summary_stats(std::vector<double> values) {
  SummaryStats s;
  s.count = static_cast<int>(values.size());
  if (values.empty()) return s;
  std::sort(values.begin(), values.end());
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / values.size();
  s.median = values[(values.size() - 1) / 2];
  double sq = 0.0;
  for (double v : values) sq += (v - s.mean) * (v - s.mean);
  s.stddev = std::sqrt(sq / values.size());
  return s;
}

ExperimentStats summarize(const std::vector<RepairOutcome>& rows) {
  std::vector<std::string> order;
  std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> completed;
  std::map<std::string, int> totals;
  for (const auto& r : rows) {
    if (!totals.count(r.method)) order.push_back(r.method);
    ++totals[r.method];
    auto& [times, changes] = completed[r.method];
    if (r.status == "Optimal") {
      times.push_back(r.wall_time_s);
      changes.push_back(r.changes);
    }
  }
  ExperimentStats stats;
  int any = 0;
  for (const auto& m : order) {
    auto& [times, changes] = completed[m];
    any += static_cast<int>(times.size());
    stats.methods.push_back(
        {m, totals[m], static_cast<int>(times.size()), summary_stats(times), summary_stats(changes)});
  }
  if (any == 0) throw Error(ErrorCode::NoCompletedRows, "no completed repairs to summarize");
  return stats;
}

std::string render_stats(const ExperimentStats& stats) {
  std::ostringstream out;
  auto table = [&](const char* title, auto pick, int digits) {
    out << title << '\n';
    out << "| method | completed | mean | median | std |\n";
    out << "|---|---|---|---|---|\n";
    for (const auto& m : stats.methods) {
      const SummaryStats& s = pick(m);
      out << "| " << m.method << " | " << m.completed << '/' << m.total << " | " << fixed(s.mean, digits) << " | "
          << fixed(s.median, digits) << " | " << fixed(s.stddev, digits) << " |\n";
    }
    out << '\n';
  };
  table("Repair time (s)", [](const MethodStats& m) -> const SummaryStats& { return m.time; }, 3);
  table("Changes", [](const MethodStats& m) -> const SummaryStats& { return m.changes; }, 2);

  const auto uni = std::find_if(stats.methods.begin(), stats.methods.end(),
                                [](const MethodStats& m) { return m.method == "UNI"; });
  if (uni != stats.methods.end() && uni->completed > 0) {
    out << "Median time against UNI\n";
    for (const auto& m : stats.methods) {
      if (m.method == "UNI" || m.completed == 0) continue;
      const double ratio = m.time.median > 0 ? uni->time.median / m.time.median : 0.0;
      out << "  " << m.method << ": " << fixed(m.time.median, 3) << " s vs " << fixed(uni->time.median, 3) << " s ("
          << fixed(ratio, 2) << "x, " << (m.time.median < uni->time.median ? "faster" : "not faster") << ")\n";
    }
  }
  return out.str();
}

std::vector<CumulativeSeries> emit_plot_data(const std::vector<RepairOutcome>& rows) {
  std::vector<CumulativeSeries> series;
  for (const auto& r : rows) {
    auto it = std::find_if(series.begin(), series.end(), [&](const auto& s) { return s.method == r.method; });
    if (it == series.end()) {
      series.push_back({r.method, {}, {}});
      it = series.end() - 1;
    }
    if (r.status == "Optimal") it->times.push_back(r.wall_time_s);
  }
  for (auto& s : series) {
    std::sort(s.times.begin(), s.times.end());
    s.repaired.resize(s.times.size());
    std::iota(s.repaired.begin(), s.repaired.end(), 1);
  }
  return series;
}

std::string plot_data_csv(const std::vector<CumulativeSeries>& series) {
  std::string out = "method,time_s,repaired\n";
  for (const auto& s : series)
    for (std::size_t i = 0; i < s.times.size(); ++i)
      out += s.method + ',' + fixed(s.times[i], 6) + ',' + std::to_string(s.repaired[i]) + '\n';
  return out;
}

std::string plot_svg(const std::vector<CumulativeSeries>& series) {
  constexpr double W = 640, H = 400, L = 60, R = 130, T = 20, B = 50;
  double tmin = kInf, tmax = 0.0;
  int cmax = 1;
  for (const auto& s : series) {
    for (double t : s.times) {
      tmin = std::min(tmin, std::max(t, 1e-6));
      tmax = std::max(tmax, std::max(t, 1e-6));
    }
    if (!s.repaired.empty()) cmax = std::max(cmax, s.repaired.back());
  }
  if (!std::isfinite(tmin)) tmin = tmax = 1.0;
  double lo = std::floor(std::log10(tmin)), hi = std::ceil(std::log10(tmax));
  if (hi <= lo) hi = lo + 1;
  auto x = [&](double t) { return L + (std::log10(std::max(t, 1e-6)) - lo) / (hi - lo) * (W - L - R); };
  auto y = [&](double c) { return H - B - c / cmax * (H - T - B); };

  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B
      << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
  for (int e = static_cast<int>(lo); e <= static_cast<int>(hi); ++e) {
    const double px = x(std::pow(10.0, e));
    out << "<line x1=\"" << px << "\" y1=\"" << H - B << "\" x2=\"" << px << "\" y2=\"" << H - B + 5
        << "\" stroke=\"black\"/>\n";
    out << "<text x=\"" << px << "\" y=\"" << H - B + 18 << "\" font-size=\"11\" text-anchor=\"middle\">1e" << e
        << "</text>\n";
  }
  out << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 10
      << "\" font-size=\"12\" text-anchor=\"middle\">time (s, log scale)</text>\n";
  out << "<text x=\"15\" y=\"" << (T + H - B) / 2 << "\" font-size=\"12\" transform=\"rotate(-90 15 " << (T + H - B) / 2
      << ")\" text-anchor=\"middle\">levels repaired</text>\n";
  out << "<text x=\"" << L - 6 << "\" y=\"" << y(cmax) + 4 << "\" font-size=\"11\" text-anchor=\"end\">" << cmax
      << "</text>\n";

  static constexpr const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"};
  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    const char* color = kColors[k % 5];
    std::ostringstream pts;
    pts << x(s.times.empty() ? std::pow(10.0, lo) : s.times.front()) << ',' << y(0);
    for (std::size_t i = 0; i < s.times.size(); ++i) {
      const double px = x(s.times[i]);
      pts << ' ' << px << ',' << y(i) << ' ' << px << ',' << y(s.repaired[i]);
    }
    pts << ' ' << x(std::pow(10.0, hi)) << ',' << y(s.repaired.empty() ? 0 : s.repaired.back());
    out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"" << pts.str() << "\"/>\n";
    const double ly = T + 15 + 18.0 * k;
    out << "<line x1=\"" << W - R + 10 << "\" y1=\"" << ly << "\" x2=\"" << W - R + 30 << "\" y2=\"" << ly
        << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    out << "<text x=\"" << W - R + 35 << "\" y=\"" << ly + 4 << "\" font-size=\"12\">" << s.method << "</text>\n";
  }
  out << "</svg>\n";
  return out.str();
}

}  // namespace levelrepair
