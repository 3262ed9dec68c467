#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "levelrepair/attribution.hpp"
#include "levelrepair/classifier.hpp"
#include "levelrepair/encode.hpp"
#include "levelrepair/level.hpp"
#include "levelrepair/patterns.hpp"
#include "levelrepair/reachability.hpp"
#include "levelrepair/solver.hpp"
#include "levelrepair/weightgen.hpp"

namespace levelrepair {

/// Movement template, pattern rules and default level size of a domain.
struct Domain {
  std::string name;
  MovementTemplate movement;
  PatternRules patterns;
  int rows = 0;
  int cols = 0;
  /// Constrained-mode generation settings for datasets and experiments.
  GenerationOptions generation;
};

/// Built-in domain; sizes follow the exemplar level.
Domain builtin_domain(std::string_view name);

// ---------------------------------------------------------------- datasets

enum class GenMode { Sampled, Constrained };

std::string_view to_string(GenMode mode);
GenMode parse_gen_mode(std::string_view name);

struct GenConfig {
  int n_per_class = 10;
  GenMode mode = GenMode::Sampled;
  std::uint64_t seed = 0;
  int rows = 0;  // 0 = domain default
  int cols = 0;
  double solid_density = 0.35;
  /// Positive: endpoints in opposite corner squares of this size.
  int endpoint_region = 0;
  /// Constrained mode: cap on the sealed pocket of unsolvable levels (0 = none).
  int pocket_limit = 0;
  /// Candidate levels tried per requested level before giving up.
  int attempts_per_level = 2000;
  /// Solver time per constrained-mode candidate.
  double solve_time_limit = 10.0;
};

struct DatasetItem {
  Level level;
  bool solvable = false;
  std::uint64_t seed = 0;
};

/// Generation settings of `domain` for `mode`.
GenConfig gen_config_for(const Domain& domain, GenMode mode);

/// Labelled levels, solvable ones first. Every label is checked by the BFS
/// oracle. Throws QuotaUnreachable when the attempt budget runs out.
std::vector<DatasetItem> gen_dataset(const Domain& domain, const GenConfig& cfg);

/// Random pattern-conforming level, or nullopt if the rejection budget runs out.
std::optional<Level> sample_level(const Domain& domain, int rows, int cols, std::uint64_t seed, int attempts,
                                  double solid_density = 0.35, int endpoint_region = 0);

/// Level from the constraint builder whose oracle label matches
/// `options.require_unreachable` (nullopt when the solve fails).
std::optional<Level> generate_constrained(const Domain& domain, int rows, int cols, std::uint64_t seed,
                                          const GenerationOptions& options, double time_limit);

/// One JSON object per line: text, solvable, domain, seed.
std::string dataset_jsonl(const std::vector<DatasetItem>& items);
std::vector<DatasetItem> parse_dataset_jsonl(std::string_view text);
void save_dataset(const std::vector<DatasetItem>& items, const std::string& path);
std::vector<DatasetItem> load_dataset(const std::string& path);

/// Classifier examples; label 1 marks unsolvable levels.
std::vector<LabeledExample> to_examples(const std::vector<DatasetItem>& items);

// ------------------------------------------------------------------ repair

struct RepairConfig {
  double time_limit = 60.0;
  /// Empty means one racer per branching rule.
  std::vector<SolverConfig> solvers;
  int ig_steps = kDefaultIgSteps;
  WeightParams weights;
  RepairOptions encoding;
};

struct RepairOutcome {
  std::string level_id;
  std::string method;
  std::string status;
  double wall_time_s = 0.0;
  double attribution_time_s = 0.0;
  int changes = 0;
  std::optional<double> objective;
  std::string winning_config;

  bool operator==(const RepairOutcome&) const = default;
};

struct RepairRun {
  RepairOutcome outcome;
  std::optional<Level> repaired;
  AttributionGrid attribution;
  WeightGrid weights;
  std::vector<SolveResult> solver_results;
};

/// Attribution, weights, encoding, racing and decoding for one level. Solver
/// failures are reported in the outcome status; an Optimal result that fails
/// the oracle or pattern check throws std::logic_error.
RepairRun repair_level(const Level& level, AttributionMethod method, const MlpModel* model, const Domain& domain,
                       const RepairConfig& cfg, std::string level_id = "level");

/// Throws RepairTimeout or InfeasibleRepair for unsuccessful outcomes.
void require_repaired(const RepairOutcome& outcome);

// -------------------------------------------------------------- experiment

struct ExperimentConfig {
  int n_levels = 100;
  std::vector<AttributionMethod> methods{AttributionMethod::ShapStyle, AttributionMethod::IntegratedGradients,
                                         AttributionMethod::Uniform};
  std::uint64_t seed = 0;
  GenMode level_source = GenMode::Constrained;
  double solid_density = 0.35;
  int endpoint_region = 0;
  int pocket_limit = 0;
  RepairConfig repair;
  /// Levels handled concurrently; 1 keeps timings comparable.
  int parallel_levels = 1;
};

ExperimentConfig experiment_config_for(const Domain& domain);

/// Unsolvable test levels shared by every method.
std::vector<Level> experiment_levels(const Domain& domain, const ExperimentConfig& cfg);

using OutcomeCallback = std::function<void(const RepairRun&, const Level& original)>;

std::vector<RepairOutcome> run_experiment(const Domain& domain, const MlpModel* model, const ExperimentConfig& cfg,
                                          const OutcomeCallback& on_outcome = {});

std::string outcomes_csv(const std::vector<RepairOutcome>& rows);
std::vector<RepairOutcome> parse_outcomes_csv(std::string_view text);

// ------------------------------------------------------------- statistics

struct SummaryStats {
  int count = 0;
  double mean = 0.0;
  double median = 0.0;  // lower middle for even counts
  double stddev = 0.0;  // population
};

SummaryStats summary_stats(std::vector<double> values);

struct MethodStats {
  std::string method;
  int total = 0;
  int completed = 0;
  SummaryStats time;
  SummaryStats changes;
};

struct ExperimentStats {
  std::vector<MethodStats> methods;
};

/// Over Optimal rows only. Throws NoCompletedRows when there are none.
ExperimentStats summarize(const std::vector<RepairOutcome>& rows);
/// Time and change tables plus each method's median time against UNI.
std::string render_stats(const ExperimentStats& stats);

struct CumulativeSeries {
  std::string method;
  std::vector<double> times;
  std::vector<int> repaired;
};

std::vector<CumulativeSeries> emit_plot_data(const std::vector<RepairOutcome>& rows);
std::string plot_data_csv(const std::vector<CumulativeSeries>& series);
/// Step curves on a logarithmic time axis.
std::string plot_svg(const std::vector<CumulativeSeries>& series);

}  // namespace levelrepair
