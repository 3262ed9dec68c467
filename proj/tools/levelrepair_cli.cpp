#include <cstdio>
#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "levelrepair/error.hpp"
#include "levelrepair/exporters.hpp"
#include "levelrepair/io.hpp"
#include "levelrepair/pipeline.hpp"

using namespace levelrepair;
namespace fs = std::filesystem;

namespace {

// TOML/INI through CLI11, JSON when the file starts with '{'.
class TomlOrJsonConfig : public CLI::ConfigTOML {
 public:
  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    std::string text((std::istreambuf_iterator<char>(input)), std::istreambuf_iterator<char>());
    auto first = text.find_first_not_of(" \t\r\n");
    if (first == std::string::npos || text[first] != '{') {
      std::istringstream again(text);
      return CLI::ConfigTOML::from_config(again);
    }
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
      throw CLI::ConversionError(std::string("config: ") + e.what());
    }
    std::vector<CLI::ConfigItem> items;
    flatten(doc, {}, items);
    return items;
  }

 private:
  static std::string scalar(const nlohmann::json& v) { return v.is_string() ? v.get<std::string>() : v.dump(); }

  static void flatten(const nlohmann::json& obj, std::vector<std::string> parents,
                      std::vector<CLI::ConfigItem>& out) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
      if (it->is_object()) {
        auto p = parents;
        p.push_back(it.key());
        // section marker so CLI11 enters the subcommand
        out.push_back({parents, it.key(), {}});
        out.back().name = "++";
        out.back().parents = p;
        flatten(*it, p, out);
        out.push_back({p, "--", {}});
        continue;
      }
      CLI::ConfigItem item{parents, it.key(), {}};
      if (it->is_array())
        for (const auto& v : *it) item.inputs.push_back(scalar(v));
      else
        item.inputs.push_back(scalar(*it));
      out.push_back(std::move(item));
    }
  }
};

struct DomainOpts {
  std::string name = "cave";
  std::string template_path;
  std::string patterns_path;

  void add(CLI::App* app) {
    app->add_option("-d,--domain", name, "cave | mario | supercat")->capture_default_str();
    app->add_option("--template", template_path, "movement template JSON (overrides the domain's)");
    app->add_option("--patterns", patterns_path, "pattern rules JSON (overrides the domain's)");
  }

  Domain load() const {
    Domain d = builtin_domain(name);
    if (!template_path.empty()) d.movement = load_template(template_path);
    if (!patterns_path.empty()) d.patterns = load_patterns(patterns_path);
    return d;
  }
};

void write_or_print(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  if (auto parent = fs::path(path).parent_path(); !parent.empty()) fs::create_directories(parent);
  write_text_file(path, text);
}

std::vector<AttributionMethod> parse_methods(const std::vector<std::string>& names) {
  std::vector<AttributionMethod> out;
  for (const auto& n : names) out.push_back(parse_attribution_method(n));
  return out;
}

std::vector<SolverConfig> parse_solvers(const std::vector<std::string>& names, double time_limit,
                                        std::uint64_t seed) {
  std::vector<SolverConfig> out;
  for (const auto& n : names) {
    SolverConfig c;
    c.id = n;
    c.branching = parse_branching(n);
    c.time_limit = time_limit;
    c.seed = seed;
    out.push_back(c);
  }
  return out;
}

ReachEncoding parse_encoding(const std::string& name) {
  if (name == "lazy") return ReachEncoding::Lazy;
  if (name == "layered") return ReachEncoding::Layered;
  throw Error(ErrorCode::InvalidArgument, "unknown encoding '" + name + "'");
}

struct RepairOpts {
  double time_limit = 60.0;
  std::vector<std::string> solvers;
  std::string encoding = "lazy";
  int horizon = 0;
  int ig_steps = kDefaultIgSteps;
  double percentile = 80.0;
  std::uint64_t solver_seed = 0;

  void add(CLI::App* app) {
    app->add_option("-t,--time-limit", time_limit, "seconds per repair")->capture_default_str();
    app->add_option("--solvers", solvers,
                    "branching rules to race (most-constrained-first, lowest-weight-first, input-order)");
    app->add_option("--encoding", encoding, "reachability encoding: lazy | layered")->capture_default_str();
    app->add_option("--horizon", horizon, "layer count for the layered encoding (0 = cell count)");
    app->add_option("--ig-steps", ig_steps, "integrated gradients steps")->capture_default_str();
    app->add_option("--percentile", percentile, "attribution threshold percentile")->capture_default_str();
    app->add_option("--solver-seed", solver_seed, "seed for solver tie breaking");
  }

  RepairConfig config() const {
    RepairConfig c;
    c.time_limit = time_limit;
    c.solvers = solvers.empty() ? default_race_configs(time_limit, solver_seed)
                                : parse_solvers(solvers, time_limit, solver_seed);
    c.encoding.encoding = parse_encoding(encoding);
    c.encoding.horizon = horizon;
    c.ig_steps = ig_steps;
    c.weights.percentile = percentile;
    return c;
  }
};

std::optional<MlpModel> maybe_model(const std::string& path) {
  if (path.empty()) return std::nullopt;
  return load_model(path);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Level repair with attribution-weighted constraint solving"};
  app.config_formatter(std::make_shared<TomlOrJsonConfig>());
  app.set_config("--config", "", "TOML or JSON file with option values (sections per subcommand)");
  app.require_subcommand(1);
  bool quiet = false;
  app.add_flag("-q,--quiet", quiet, "less progress output");

  // ------------------------------------------------------------------ gen
  auto* gen = app.add_subcommand("gen", "generate a labelled dataset (JSON lines)");
  DomainOpts gen_domain;
  gen_domain.add(gen);
  int gen_n = 1000;
  std::string gen_mode = "constrained", gen_out = "dataset.jsonl";
  std::uint64_t gen_seed = 0;
  int gen_rows = 0, gen_cols = 0, gen_attempts = 2000, gen_region = 0, gen_pocket = 0;
  double gen_density = 0.35, gen_time = 10.0;
  gen->add_option("-n,--n-per-class", gen_n, "levels per class")->capture_default_str();
  gen->add_option("--mode", gen_mode, "sampled | constrained")->capture_default_str();
  gen->add_option("-s,--seed", gen_seed)->capture_default_str();
  gen->add_option("--rows", gen_rows, "0 = domain default");
  gen->add_option("--cols", gen_cols, "0 = domain default");
  auto* gen_density_opt = gen->add_option("--density", gen_density, "solid density (default from domain preset)");
  auto* gen_region_opt = gen->add_option("--endpoint-region", gen_region, "corner square for Start/Goal");
  auto* gen_pocket_opt = gen->add_option("--pocket-limit", gen_pocket, "max marked cells of unsolvable levels");
  gen->add_option("--attempts", gen_attempts, "candidates per requested level")->capture_default_str();
  gen->add_option("--solve-time", gen_time, "solver seconds per constrained candidate")->capture_default_str();
  gen->add_option("-o,--out", gen_out)->capture_default_str();

  // ---------------------------------------------------------------- train
  auto* tr = app.add_subcommand("train", "train the solvability classifier");
  std::string tr_data, tr_out = "model.json", tr_log;
  TrainConfig tr_cfg;
  int tr_h1 = kDefaultHidden1, tr_h2 = kDefaultHidden2;
  double tr_split = 0.8, tr_dropout = kDefaultDropout;
  tr->add_option("--data", tr_data, "dataset JSON lines")->required();
  tr->add_option("-o,--out", tr_out)->capture_default_str();
  tr->add_option("--log", tr_log, "per-epoch CSV log");
  tr->add_option("--epochs", tr_cfg.epochs)->capture_default_str();
  tr->add_option("--lr", tr_cfg.learning_rate)->capture_default_str();
  tr->add_option("--weight-decay", tr_cfg.weight_decay)->capture_default_str();
  tr->add_option("--batch-size", tr_cfg.batch_size)->capture_default_str();
  tr->add_option("-s,--seed", tr_cfg.seed)->capture_default_str();
  tr->add_option("--hidden1", tr_h1)->capture_default_str();
  tr->add_option("--hidden2", tr_h2)->capture_default_str();
  tr->add_option("--dropout", tr_dropout)->capture_default_str();
  tr->add_option("--train-fraction", tr_split)->capture_default_str();

  // ----------------------------------------------------------------- attr
  auto* at = app.add_subcommand("attr", "per-cell attributions of a level");
  std::string at_level, at_model, at_method = "SHAP", at_out, at_svg, at_meta;
  int at_steps = kDefaultIgSteps;
  at->add_option("--level", at_level)->required();
  at->add_option("--model", at_model, "trained model (SHAP and IG)");
  at->add_option("-m,--method", at_method, "SHAP | IG | UNI")->capture_default_str();
  at->add_option("--steps", at_steps, "integrated gradients steps")->capture_default_str();
  at->add_option("-o,--out", at_out, "CSV (stdout when omitted)");
  at->add_option("--svg", at_svg, "heat grid");
  at->add_option("--meta", at_meta, "JSON metadata");

  // -------------------------------------------------------------- weights
  auto* wt = app.add_subcommand("weights", "turn attributions into repair weights");
  std::string wt_attr, wt_out, wt_svg;
  WeightParams wt_params;
  wt->add_option("--attr", wt_attr, "attribution CSV")->required();
  wt->add_option("--percentile", wt_params.percentile)->capture_default_str();
  wt->add_option("--low", wt_params.low)->capture_default_str();
  wt->add_option("--high", wt_params.high)->capture_default_str();
  wt->add_option("--connectivity", wt_params.connectivity)->capture_default_str();
  wt->add_option("-o,--out", wt_out, "CSV (stdout when omitted)");
  wt->add_option("--svg", wt_svg, "heat grid, low weights black");

  // --------------------------------------------------------------- repair
  auto* rp = app.add_subcommand("repair", "repair one level");
  DomainOpts rp_domain;
  rp_domain.add(rp);
  RepairOpts rp_opts;
  rp_opts.add(rp);
  std::string rp_level, rp_model, rp_method = "UNI", rp_weights, rp_out, rp_outcome, rp_log;
  rp->add_option("--level", rp_level)->required();
  rp->add_option("--model", rp_model, "trained model (SHAP and IG)");
  rp->add_option("-m,--method", rp_method, "SHAP | IG | UNI")->capture_default_str();
  rp->add_option("--weights", rp_weights, "weight CSV; skips attribution");
  rp->add_option("-o,--out", rp_out, "repaired level (stdout when omitted)");
  rp->add_option("--outcome", rp_outcome, "outcome CSV");
  rp->add_option("--solver-log", rp_log, "per-racer CSV");

  // ---------------------------------------------------------------- bench
  auto* bn = app.add_subcommand("bench", "repair generated unsolvable levels with every method");
  DomainOpts bn_domain;
  bn_domain.add(bn);
  RepairOpts bn_opts;
  bn_opts.add(bn);
  std::string bn_model, bn_out = "outcomes.csv", bn_levels_dir, bn_source = "constrained";
  std::vector<std::string> bn_methods{"SHAP", "IG", "UNI"};
  int bn_n = 100, bn_parallel = 1;
  std::uint64_t bn_seed = 0;
  bn->add_option("--model", bn_model, "trained model (needed for SHAP and IG)");
  bn->add_option("-n,--n-levels", bn_n)->capture_default_str();
  bn->add_option("--methods", bn_methods)->capture_default_str();
  bn->add_option("-s,--seed", bn_seed)->capture_default_str();
  bn->add_option("--source", bn_source, "constrained | sampled")->capture_default_str();
  bn->add_option("--parallel-levels", bn_parallel, "levels in flight (timings less comparable)");
  bn->add_option("-o,--out", bn_out)->capture_default_str();
  bn->add_option("--levels-dir", bn_levels_dir, "write original and repaired levels here");

  // ------------------------------------------------------------ summarize
  auto* sm = app.add_subcommand("summarize", "mean/median/std tables from an outcomes CSV");
  std::string sm_in, sm_out;
  sm->add_option("--in", sm_in)->required();
  sm->add_option("-o,--out", sm_out, "markdown (stdout when omitted)");

  // ----------------------------------------------------------------- plot
  auto* pl = app.add_subcommand("plot", "cumulative repaired-over-time series");
  std::string pl_in, pl_csv, pl_svg;
  pl->add_option("--in", pl_in)->required();
  pl->add_option("--csv", pl_csv, "series CSV (stdout when omitted)");
  pl->add_option("--svg", pl_svg, "step plot on a log time axis");

  // --------------------------------------------------------------- export
  auto* ex = app.add_subcommand("export", "write a repair or generation program as LP, WCNF or JSON");
  DomainOpts ex_domain;
  ex_domain.add(ex);
  std::string ex_kind = "repair", ex_format = "lp", ex_level, ex_weights, ex_out, ex_encoding = "layered";
  int ex_rows = 0, ex_cols = 0, ex_horizon = 0;
  std::uint64_t ex_seed = 0;
  ex->add_option("--kind", ex_kind, "repair | unsolvable")->capture_default_str();
  ex->add_option("-f,--format", ex_format, "lp | wcnf | json")->capture_default_str();
  ex->add_option("--level", ex_level, "level to repair (kind repair)");
  ex->add_option("--weights", ex_weights, "weight CSV (uniform when omitted)");
  ex->add_option("--encoding", ex_encoding, "lazy | layered (LP/WCNF need layered)")->capture_default_str();
  ex->add_option("--horizon", ex_horizon, "layer count (0 = cell count)");
  ex->add_option("--rows", ex_rows, "grid rows (kind unsolvable, 0 = domain default)");
  ex->add_option("--cols", ex_cols);
  ex->add_option("-s,--seed", ex_seed);
  ex->add_option("-o,--out", ex_out, "stdout when omitted");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  auto note = [&](const std::string& msg) {
    if (!quiet) std::cerr << msg << '\n';
  };

  try {
    if (*gen) {
      Domain d = gen_domain.load();
      GenConfig cfg = gen_config_for(d, parse_gen_mode(gen_mode));
      cfg.n_per_class = gen_n;
      cfg.seed = gen_seed;
      cfg.rows = gen_rows;
      cfg.cols = gen_cols;
      if (gen_density_opt->count()) cfg.solid_density = gen_density;
      if (gen_region_opt->count()) cfg.endpoint_region = gen_region;
      if (gen_pocket_opt->count()) cfg.pocket_limit = gen_pocket;
      cfg.attempts_per_level = gen_attempts;
      cfg.solve_time_limit = gen_time;
      auto items = gen_dataset(d, cfg);
      save_dataset(items, gen_out);
      note("wrote " + std::to_string(items.size()) + " levels to " + gen_out);
    } else if (*tr) {
      auto items = load_dataset(tr_data);
      if (items.empty()) throw Error(ErrorCode::CorruptFile, "dataset is empty");
      const auto& first = items.front().level;
      auto split = split_dataset(to_examples(items), tr_split, tr_cfg.seed);
      auto model = init_model(first.rows(), first.cols(), tr_h1, tr_h2, tr_cfg.seed, tr_dropout);
      auto result = train(std::move(model), split, tr_cfg);
      save_model(result.model, tr_out);
      if (!tr_log.empty()) write_text_file(tr_log, training_log_csv(result.log));
      const auto& last = result.log.back();
      char buf[160];
      std::snprintf(buf, sizeof buf, "epochs %d  loss %.4f  train acc %.4f  test acc %.4f", last.epoch, last.loss,
                    last.train_acc, last.test_acc);
      note(buf);
    } else if (*at) {
      Level lv = load_level(at_level);
      auto method = parse_attribution_method(at_method);
      auto model = maybe_model(at_model);
      auto grid = attribute(method, model ? &*model : nullptr, lv, at_steps);
      write_or_print(at_out, attribution_csv(grid));
      if (!at_svg.empty()) write_text_file(at_svg, heat_grid_svg(grid.rows, grid.cols, grid.values, false));
      if (!at_meta.empty())
        write_text_file(at_meta, attribution_metadata_json(grid, at_steps, model ? model_hash(*model) : ""));
    } else if (*wt) {
      auto grid = parse_attribution_csv(read_text_file(wt_attr), AttributionMethod::Uniform);
      auto w = attributions_to_weights(grid, wt_params);
      write_or_print(wt_out, weights_csv(w));
      if (!wt_svg.empty()) {
        std::vector<double> v(w.values.begin(), w.values.end());
        write_text_file(wt_svg, heat_grid_svg(w.rows, w.cols, v, true));
      }
    } else if (*rp) {
      Domain d = rp_domain.load();
      Level lv = load_level(rp_level, d.name);
      if (check_solvable(lv, d.movement).solvable) note("warning: level is already solvable");
      RepairConfig cfg = rp_opts.config();
      RepairOutcome outcome;
      std::optional<Level> repaired;
      std::vector<SolveResult> results;
      if (!rp_weights.empty()) {
        // fixed weights: skip attribution
        auto w = parse_weights_csv(read_text_file(rp_weights));
        auto t0 = std::chrono::steady_clock::now();
        auto problem = build_repair_problem(lv, w, d.movement, d.patterns, cfg.encoding);
        auto result = race(problem.program, cfg.solvers, cfg.time_limit, &results);
        outcome.level_id = fs::path(rp_level).stem().string();
        outcome.method = "weights";
        outcome.status = std::string(to_string(result.status));
        if (result.conclusive()) outcome.winning_config = result.config_id;
        if (result.status == SolveStatus::Optimal) {
          repaired = decode_level(problem.vars(), *result.assignment, d.name);
          outcome.changes = static_cast<int>(diff_cells(lv, *repaired).size());
          outcome.objective = result.objective;
        }
        outcome.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      } else {
        auto model = maybe_model(rp_model);
        auto run = repair_level(lv, parse_attribution_method(rp_method), model ? &*model : nullptr, d, cfg,
                                fs::path(rp_level).stem().string());
        outcome = run.outcome;
        repaired = run.repaired;
        results = run.solver_results;
      }
      if (!rp_outcome.empty()) write_text_file(rp_outcome, outcomes_csv({outcome}));
      if (!rp_log.empty()) write_text_file(rp_log, solver_log_csv(results));
      note("status " + outcome.status + ", " + std::to_string(outcome.changes) + " changes");
      if (repaired) write_or_print(rp_out, serialize_level(*repaired));
      require_repaired(outcome);
    } else if (*bn) {
      Domain d = bn_domain.load();
      ExperimentConfig cfg = experiment_config_for(d);
      cfg.n_levels = bn_n;
      cfg.methods = parse_methods(bn_methods);
      cfg.seed = bn_seed;
      cfg.level_source = parse_gen_mode(bn_source);
      cfg.parallel_levels = bn_parallel;
      cfg.repair = bn_opts.config();
      auto model = maybe_model(bn_model);
      if (!bn_levels_dir.empty()) fs::create_directories(bn_levels_dir);
      std::size_t done = 0;
      const std::size_t total = static_cast<std::size_t>(bn_n) * cfg.methods.size();
      auto rows = run_experiment(d, model ? &*model : nullptr, cfg, [&](const RepairRun& run, const Level& orig) {
        ++done;
        if (!bn_levels_dir.empty()) {
          fs::path dir(bn_levels_dir);
          save_level(orig, (dir / (run.outcome.level_id + ".txt")).string());
          if (run.repaired)
            save_level(*run.repaired, (dir / (run.outcome.level_id + "." + run.outcome.method + ".txt")).string());
        }
        if (!quiet)
          std::fprintf(stderr, "[%zu/%zu] %s %s %s %.3fs\n", done, total, run.outcome.level_id.c_str(),
                       run.outcome.method.c_str(), run.outcome.status.c_str(), run.outcome.wall_time_s);
      });
      write_or_print(bn_out, outcomes_csv(rows));
    } else if (*sm) {
      auto rows = parse_outcomes_csv(read_text_file(sm_in));
      write_or_print(sm_out, render_stats(summarize(rows)));
    } else if (*pl) {
      auto series = emit_plot_data(parse_outcomes_csv(read_text_file(pl_in)));
      write_or_print(pl_csv, plot_data_csv(series));
      if (!pl_svg.empty()) write_text_file(pl_svg, plot_svg(series));
    } else if (*ex) {
      Domain d = ex_domain.load();
      std::optional<EncodedProblem> problem;
      if (ex_kind == "repair") {
        if (ex_level.empty()) throw Error(ErrorCode::InvalidArgument, "--level is required for kind repair");
        Level lv = load_level(ex_level, d.name);
        WeightGrid w = ex_weights.empty() ? uniform_weights(lv.rows(), lv.cols(), 1)
                                          : parse_weights_csv(read_text_file(ex_weights));
        RepairOptions opt{parse_encoding(ex_encoding), ex_horizon};
        problem = build_repair_problem(lv, w, d.movement, d.patterns, opt);
      } else if (ex_kind == "unsolvable") {
        problem = build_unsolvable_problem(ex_rows ? ex_rows : d.rows, ex_cols ? ex_cols : d.cols, d.movement,
                                           d.patterns, ex_seed, d.generation);
      } else {
        throw Error(ErrorCode::InvalidArgument, "unknown kind '" + ex_kind + "'");
      }
      std::string text;
      if (ex_format == "lp") text = export_lp(problem->program);
      else if (ex_format == "wcnf") text = export_wcnf(problem->program);
      else if (ex_format == "json") text = program_to_json(problem->program);
      else throw Error(ErrorCode::InvalidArgument, "unknown format '" + ex_format + "'");
      write_or_print(ex_out, text);
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
