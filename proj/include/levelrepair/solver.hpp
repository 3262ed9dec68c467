#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stop_token>
#include <string>
#include <string_view>
#include <vector>

#include "levelrepair/program.hpp"

namespace levelrepair {

enum class Branching {
  MostConstrainedFirst,
  LowestWeightFirst,
  InputOrder,
};

std::string_view to_string(Branching b);
Branching parse_branching(std::string_view name);

enum class SolveStatus {
  Optimal,
  Infeasible,
  Timeout,
  Feasible,   // first_solution mode stopped at an unproven incumbent
  Cancelled,  // another racer won
};

std::string_view to_string(SolveStatus s);
SolveStatus parse_solve_status(std::string_view name);

struct SolverConfig {
  std::string id = "bb";
  Branching branching = Branching::LowestWeightFirst;
  double time_limit = 60.0;
  std::uint64_t seed = 0;
  /// Check reachability of grid programs with the BFS oracle (required for
  /// programs built with lazy reachability).
  bool use_lazy_oracle = true;
  /// Stop at the first feasible point.
  bool first_solution = false;
  /// 0 = unlimited.
  std::uint64_t node_limit = 0;
};

struct SolveResult {
  SolveStatus status = SolveStatus::Infeasible;
  std::optional<std::vector<std::uint8_t>> assignment;
  std::optional<double> objective;
  std::uint64_t nodes_explored = 0;
  double wall_time = 0.0;
  std::string config_id;
  /// Objective of every improving incumbent, in discovery order.
  std::vector<double> incumbent_history;

  bool conclusive() const {
    return status == SolveStatus::Optimal || status == SolveStatus::Infeasible || status == SolveStatus::Feasible;
  }
};

/// Depth-first branch and bound over the 0-1 variables of `program`.
/// Throws MalformedProgram for inconsistent programs.
SolveResult solve_bb(const ConstraintProgram& program, const SolverConfig& config, std::stop_token cancel = {});

/// Runs every config concurrently; the first conclusive result wins and stops
/// the others. `all_results`, when given, receives each racer's result.
SolveResult race(const ConstraintProgram& program, std::span<const SolverConfig> configs, double time_limit,
                 std::vector<SolveResult>* all_results = nullptr);

/// One config per branching rule.
std::vector<SolverConfig> default_race_configs(double time_limit, std::uint64_t seed = 0);

std::string solver_log_csv(std::span<const SolveResult> results);

}  // namespace levelrepair
