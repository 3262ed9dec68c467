#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "levelrepair/error.hpp"
#include "levelrepair/exporters.hpp"
#include "levelrepair/pipeline.hpp"

namespace py = pybind11;
using namespace levelrepair;

namespace {

std::vector<double> as_vector(const OneHotTensor& t) { return t.values; }

}  // namespace

PYBIND11_MODULE(_levelrepair, m) {
  m.doc() = "Level repair with attribution-weighted 0-1 programming";

  static py::handle error_type = py::exception<Error>(m, "LevelRepairError").release();
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object exc = py::reinterpret_borrow<py::object>(error_type)(e.what());
      exc.attr("code") = std::string(to_string(e.code()));
      PyErr_SetObject(error_type.ptr(), exc.ptr());
    }
  });

  // ------------------------------------------------------------- levels
  py::enum_<TileKind>(m, "TileKind")
      .value("Empty", TileKind::Empty)
      .value("Solid", TileKind::Solid)
      .value("Start", TileKind::Start)
      .value("Goal", TileKind::Goal);

  py::class_<Level>(m, "Level")
      .def(py::init([](const std::string& text, const std::string& domain) { return parse_level(text, domain); }),
           py::arg("text"), py::arg("domain") = "custom")
      .def_property_readonly("rows", &Level::rows)
      .def_property_readonly("cols", &Level::cols)
      .def_property_readonly("domain", &Level::domain)
      .def_property_readonly("start", [](const Level& l) { return std::make_pair(l.start().row, l.start().col); })
      .def_property_readonly("goal", [](const Level& l) { return std::make_pair(l.goal().row, l.goal().col); })
      .def("at", [](const Level& l, int r, int c) { return l.at(r, c); })
      .def("with_tile", [](const Level& l, int r, int c, TileKind k) { return l.with_tile({r, c}, k); })
      .def("onehot", [](const Level& l) { return as_vector(to_onehot(l)); })
      .def("__str__", &serialize_level)
      .def("__eq__", [](const Level& a, const Level& b) { return a == b; });

  m.def("parse_level", &parse_level, py::arg("text"), py::arg("domain") = "custom");
  m.def("serialize_level", &serialize_level);
  m.def("load_level", &load_level, py::arg("path"), py::arg("domain") = "custom");
  m.def("diff_cells", [](const Level& a, const Level& b) {
    std::vector<std::tuple<int, int, TileKind, TileKind>> out;
    for (const auto& d : diff_cells(a, b)) out.emplace_back(d.cell.row, d.cell.col, d.from, d.to);
    return out;
  });

  // ------------------------------------------------------ reachability
  py::class_<MovementTemplate>(m, "MovementTemplate")
      .def_readonly("name", &MovementTemplate::name)
      .def_property_readonly("num_rules", [](const MovementTemplate& t) { return t.rules.size(); })
      .def("to_json", &template_to_json);
  m.def("builtin_template", [](const std::string& d) { return builtin_template(d); });
  m.def("parse_template_json", [](const std::string& s) { return parse_template_json(s); });
  m.def("check_solvable", [](const Level& l, const MovementTemplate& t) {
    auto r = check_solvable(l, t);
    std::optional<std::vector<std::pair<int, int>>> path;
    if (r.path) {
      path.emplace();
      for (auto c : *r.path) path->emplace_back(c.row, c.col);
    }
    return py::make_tuple(r.solvable, path);
  });
  m.def("legal_moves", [](const Level& l, const MovementTemplate& t, int r, int c) {
    std::vector<std::pair<int, int>> out;
    for (auto d : legal_moves(l, t, {r, c})) out.emplace_back(d.row, d.col);
    return out;
  });

  // ---------------------------------------------------------- patterns
  py::class_<PatternRules>(m, "PatternRules")
      .def_property_readonly("num_horizontal", [](const PatternRules& p) { return p.horizontal.size(); })
      .def_property_readonly("num_vertical", [](const PatternRules& p) { return p.vertical.size(); })
      .def("to_json", &patterns_to_json);
  m.def("extract_patterns", &extract_patterns);
  m.def("builtin_patterns", [](const std::string& d) { return builtin_patterns(d); });
  m.def("check_patterns", [](const Level& l, const PatternRules& r) { return check_patterns(l, r).size(); },
        "number of violating adjacencies");

  // -------------------------------------------------------- classifier
  py::class_<MlpModel>(m, "MlpModel")
      .def_readonly("dims", &MlpModel::dims)
      .def("to_json", &model_to_json)
      .def("hash", &model_hash)
      .def("probability", [](const MlpModel& model, const Level& l) { return forward(model, to_onehot(l)); })
      .def("logit", [](const MlpModel& model, const std::vector<double>& x) { return logit(model, std::span<const double>(x)); })
      .def("grad_logit", [](const MlpModel& model, const std::vector<double>& x) { return grad_logit(model, std::span<const double>(x)); });
  m.def("init_model", py::overload_cast<int, int, int, int, std::uint64_t, double>(&init_model), py::arg("rows"),
        py::arg("cols"), py::arg("hidden1") = kDefaultHidden1, py::arg("hidden2") = kDefaultHidden2,
        py::arg("seed") = 0, py::arg("dropout") = kDefaultDropout);
  m.def("load_model", &load_model);
  m.def("save_model", &save_model);
  m.def("model_from_json", [](const std::string& s) { return model_from_json(s); });

  py::class_<TrainConfig>(m, "TrainConfig")
      .def(py::init<>())
      .def_readwrite("learning_rate", &TrainConfig::learning_rate)
      .def_readwrite("weight_decay", &TrainConfig::weight_decay)
      .def_readwrite("epochs", &TrainConfig::epochs)
      .def_readwrite("batch_size", &TrainConfig::batch_size)
      .def_readwrite("seed", &TrainConfig::seed);

  // --------------------------------------------------------- datasets
  py::class_<Domain>(m, "Domain")
      .def_readonly("name", &Domain::name)
      .def_readwrite("movement", &Domain::movement)
      .def_readwrite("patterns", &Domain::patterns)
      .def_readwrite("rows", &Domain::rows)
      .def_readwrite("cols", &Domain::cols);
  m.def("builtin_domain", [](const std::string& d) { return builtin_domain(d); });

  py::class_<DatasetItem>(m, "DatasetItem")
      .def_readonly("level", &DatasetItem::level)
      .def_readonly("solvable", &DatasetItem::solvable)
      .def_readonly("seed", &DatasetItem::seed);
  m.def(
      "gen_dataset",
      [](const Domain& d, int n_per_class, const std::string& mode, std::uint64_t seed) {
        GenConfig cfg = gen_config_for(d, parse_gen_mode(mode));
        cfg.n_per_class = n_per_class;
        cfg.seed = seed;
        return gen_dataset(d, cfg);
      },
      py::arg("domain"), py::arg("n_per_class"), py::arg("mode") = "constrained", py::arg("seed") = 0);
  m.def("dataset_jsonl", &dataset_jsonl);
  m.def("parse_dataset_jsonl", [](const std::string& s) { return parse_dataset_jsonl(s); });
  m.def(
      "train_model",
      [](const std::vector<DatasetItem>& items, const TrainConfig& cfg, int hidden1, int hidden2) {
        if (items.empty()) throw Error(ErrorCode::InvalidArgument, "empty dataset");
        auto split = split_dataset(to_examples(items), 0.8, cfg.seed);
        const auto& l = items.front().level;
        auto result = train(init_model(l.rows(), l.cols(), hidden1, hidden2, cfg.seed), split, cfg);
        std::vector<std::tuple<int, double, double, double>> log;
        for (const auto& e : result.log) log.emplace_back(e.epoch, e.loss, e.train_acc, e.test_acc);
        return py::make_tuple(result.model, log);
      },
      py::arg("items"), py::arg("config") = TrainConfig{}, py::arg("hidden1") = kDefaultHidden1,
      py::arg("hidden2") = kDefaultHidden2);

  // ------------------------------------------------ attribution/weights
  py::enum_<AttributionMethod>(m, "AttributionMethod")
      .value("SHAP", AttributionMethod::ShapStyle)
      .value("IG", AttributionMethod::IntegratedGradients)
      .value("UNI", AttributionMethod::Uniform);
  py::class_<AttributionGrid>(m, "AttributionGrid")
      .def_readonly("rows", &AttributionGrid::rows)
      .def_readonly("cols", &AttributionGrid::cols)
      .def_readonly("values", &AttributionGrid::values)
      .def("total", &AttributionGrid::total);
  m.def(
      "attribute",
      [](const std::string& method, const MlpModel* model, const Level& l, int steps) {
        return attribute(parse_attribution_method(method), model, l, steps);
      },
      py::arg("method"), py::arg("model"), py::arg("level"), py::arg("ig_steps") = kDefaultIgSteps);

  py::class_<WeightGrid>(m, "WeightGrid")
      .def(py::init([](int rows, int cols, std::vector<int> values) {
        if (values.size() != static_cast<std::size_t>(rows) * cols)
          throw Error(ErrorCode::DimensionMismatch, "weight count does not match rows x cols");
        return WeightGrid{rows, cols, std::move(values)};
      }))
      .def_readonly("rows", &WeightGrid::rows)
      .def_readonly("cols", &WeightGrid::cols)
      .def_readonly("values", &WeightGrid::values);
  m.def(
      "attributions_to_weights",
      [](const AttributionGrid& g, double percentile, int low, int high, int connectivity) {
        return attributions_to_weights(g, {percentile, low, high, connectivity});
      },
      py::arg("grid"), py::arg("percentile") = 80.0, py::arg("low") = 1, py::arg("high") = 10,
      py::arg("connectivity") = 8);
  m.def("nearest_rank_percentile",
        [](const std::vector<double>& v, double p) { return nearest_rank_percentile(v, p); });
  m.def("uniform_weights", &uniform_weights);

  // -------------------------------------------------------- programs
  py::class_<ConstraintProgram>(m, "ConstraintProgram")
      .def(py::init<>())
      .def("make_var", &ConstraintProgram::make_var)
      .def(
          "make_conj",
          [](ConstraintProgram& p, const std::vector<std::pair<VarId, bool>>& lits) {
            std::vector<Literal> l;
            for (auto [v, s] : lits) l.push_back({v, s});
            return p.make_conj(l).var;
          },
          "literals as (var, positive); returns the new variable")
      .def(
          "cnstr_implies_disj",
          [](ConstraintProgram& p, std::pair<VarId, bool> premise, const std::vector<std::pair<VarId, bool>>& disj,
             std::optional<double> weight) {
            std::vector<Literal> l;
            for (auto [v, s] : disj) l.push_back({v, s});
            p.cnstr_implies_disj({premise.first, premise.second}, l, weight);
          },
          py::arg("premise"), py::arg("disjuncts"), py::arg("weight") = py::none())
      .def(
          "cnstr_count",
          [](ConstraintProgram& p, const std::vector<std::pair<VarId, bool>>& lits, int lo, int hi,
             std::optional<double> weight) {
            std::vector<Literal> l;
            for (auto [v, s] : lits) l.push_back({v, s});
            p.cnstr_count(l, lo, hi, weight);
          },
          py::arg("lits"), py::arg("lo"), py::arg("hi"), py::arg("weight") = py::none())
      .def(
          "add_row",
          [](ConstraintProgram& p, const std::vector<std::pair<VarId, double>>& terms, std::optional<double> lo,
             std::optional<double> hi) {
            Row r;
            for (auto [v, c] : terms) r.terms.push_back({v, c});
            r.lo = lo.value_or(-kInf);
            r.hi = hi.value_or(kInf);
            p.add_row(std::move(r));
          },
          py::arg("terms"), py::arg("lo") = py::none(), py::arg("hi") = py::none())
      .def("set_weight", &ConstraintProgram::set_weight)
      .def_property_readonly("num_vars", &ConstraintProgram::num_vars)
      .def_property_readonly("weights", &ConstraintProgram::weights)
      .def("objective", [](const ConstraintProgram& p, const std::vector<std::uint8_t>& x) { return p.objective(x); })
      .def("satisfies_rows",
           [](const ConstraintProgram& p, const std::vector<std::uint8_t>& x) { return p.satisfies_rows(x); });

  m.def("export_lp", &export_lp);
  m.def("export_wcnf", &export_wcnf);
  m.def("program_to_json", &program_to_json);

  py::class_<SolveResult>(m, "SolveResult")
      .def_property_readonly("status", [](const SolveResult& r) { return std::string(to_string(r.status)); })
      .def_readonly("assignment", &SolveResult::assignment)
      .def_readonly("objective", &SolveResult::objective)
      .def_readonly("nodes_explored", &SolveResult::nodes_explored)
      .def_readonly("wall_time", &SolveResult::wall_time)
      .def_readonly("config_id", &SolveResult::config_id);
  m.def(
      "solve_bb",
      [](const ConstraintProgram& p, const std::string& branching, double time_limit, std::uint64_t seed) {
        SolverConfig cfg;
        cfg.id = branching;
        cfg.branching = parse_branching(branching);
        cfg.time_limit = time_limit;
        cfg.seed = seed;
        py::gil_scoped_release release;
        return solve_bb(p, cfg);
      },
      py::arg("program"), py::arg("branching") = "lowest-weight-first", py::arg("time_limit") = 60.0,
      py::arg("seed") = 0);
  m.def(
      "race",
      [](const ConstraintProgram& p, double time_limit) {
        auto configs = default_race_configs(time_limit);
        py::gil_scoped_release release;
        return race(p, configs, time_limit);
      },
      py::arg("program"), py::arg("time_limit") = 60.0);

  py::class_<EncodedProblem>(m, "EncodedProblem")
      .def_property_readonly("program", [](const EncodedProblem& e) { return e.program; })
      .def("decode", [](const EncodedProblem& e, const std::vector<std::uint8_t>& x) {
        return decode_level(e.vars(), x, e.grid->domain);
      });
  m.def(
      "build_repair_problem",
      [](const Level& l, const WeightGrid& w, const Domain& d, const std::string& encoding) {
        RepairOptions opt;
        opt.encoding = encoding == "layered" ? ReachEncoding::Layered : ReachEncoding::Lazy;
        return build_repair_problem(l, w, d.movement, d.patterns, opt);
      },
      py::arg("level"), py::arg("weights"), py::arg("domain"), py::arg("encoding") = "lazy");
  m.def(
      "build_unsolvable_problem",
      [](const Domain& d, int rows, int cols, std::uint64_t seed) {
        return build_unsolvable_problem(rows, cols, d.movement, d.patterns, seed, d.generation);
      },
      py::arg("domain"), py::arg("rows"), py::arg("cols"), py::arg("seed") = 0);

  // ----------------------------------------------------------- pipeline
  py::class_<RepairOutcome>(m, "RepairOutcome")
      .def_readonly("level_id", &RepairOutcome::level_id)
      .def_readonly("method", &RepairOutcome::method)
      .def_readonly("status", &RepairOutcome::status)
      .def_readonly("wall_time_s", &RepairOutcome::wall_time_s)
      .def_readonly("attribution_time_s", &RepairOutcome::attribution_time_s)
      .def_readonly("changes", &RepairOutcome::changes)
      .def_readonly("objective", &RepairOutcome::objective)
      .def_readonly("winning_config", &RepairOutcome::winning_config);
  m.def(
      "repair_level",
      [](const Level& l, const std::string& method, const MlpModel* model, const Domain& d, double time_limit) {
        RepairConfig cfg;
        cfg.time_limit = time_limit;
        py::gil_scoped_release release;
        auto run = repair_level(l, parse_attribution_method(method), model, d, cfg);
        return std::make_pair(run.outcome, run.repaired);
      },
      py::arg("level"), py::arg("method"), py::arg("model"), py::arg("domain"), py::arg("time_limit") = 60.0);
  m.def(
      "run_experiment",
      [](const Domain& d, const MlpModel* model, int n_levels, const std::vector<std::string>& methods,
         std::uint64_t seed, double time_limit) {
        ExperimentConfig cfg = experiment_config_for(d);
        cfg.n_levels = n_levels;
        cfg.methods.clear();
        for (const auto& name : methods) cfg.methods.push_back(parse_attribution_method(name));
        cfg.seed = seed;
        cfg.repair.time_limit = time_limit;
        py::gil_scoped_release release;
        return run_experiment(d, model, cfg);
      },
      py::arg("domain"), py::arg("model"), py::arg("n_levels") = 100,
      py::arg("methods") = std::vector<std::string>{"SHAP", "IG", "UNI"}, py::arg("seed") = 0,
      py::arg("time_limit") = 60.0);
  m.def("outcomes_csv", &outcomes_csv);
  m.def("parse_outcomes_csv", [](const std::string& s) { return parse_outcomes_csv(s); });
  m.def("summarize_csv", [](const std::string& s) { return render_stats(summarize(parse_outcomes_csv(s))); });
  m.def("summary_stats", [](std::vector<double> v) {
    auto s = summary_stats(std::move(v));
    return py::dict(py::arg("count") = s.count, py::arg("mean") = s.mean, py::arg("median") = s.median,
                    py::arg("std") = s.stddev);
  });
  m.def("plot_data_csv", [](const std::string& s) { return plot_data_csv(emit_plot_data(parse_outcomes_csv(s))); });
}
