#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "levelrepair/level.hpp"
#include "levelrepair/patterns.hpp"
#include "levelrepair/program.hpp"
#include "levelrepair/reachability.hpp"
#include "levelrepair/weightgen.hpp"

namespace levelrepair {

/// Level cells to program variables.
struct VarMap {
  int rows = 0;
  int cols = 0;
  std::vector<std::array<VarId, 4>> tile;  // per cell, indexed by TileKind
  std::vector<std::vector<VarId>> reach;   // reach[k][cell], layered encoding only
  std::vector<VarId> mark;                 // superset marking, unsolvable builder only

  std::size_t cell_index(Cell c) const { return static_cast<std::size_t>(c.row) * cols + c.col; }
  Literal tile_lit(Cell c, TileKind k) const { return pos(tile[cell_index(c)][static_cast<int>(k)]); }
  bool in_bounds(Cell c) const { return c.row >= 0 && c.row < rows && c.col >= 0 && c.col < cols; }
};

enum class ReachEncoding {
  Lazy,     // reachability checked by the solver with the BFS oracle
  Layered,  // distance-layered marking variables in the program
};

/// Everything a solver needs to reason about the grid behind a program.
struct GridAttachment {
  VarMap vars;
  MovementTemplate movement;
  std::string domain;
  bool lazy_reachability = false;
  Cell start;
  Cell goal;
  std::vector<TileKind> original;               // repair only
  std::vector<std::optional<VarId>> keep_var;   // weighting var of each cell's soft same-tile constraint
};

struct RepairOptions {
  ReachEncoding encoding = ReachEncoding::Lazy;
  /// Layer count for the layered encoding; 0 means one per cell.
  int horizon = 0;
};

struct EncodedProblem {
  ConstraintProgram program;
  std::shared_ptr<const GridAttachment> grid;

  const VarMap& vars() const { return grid->vars; }
};

EncodedProblem build_repair_problem(const Level& level, const WeightGrid& weights, const MovementTemplate& movement,
                                    const PatternRules& patterns, const RepairOptions& options = {});

struct GenerationOptions {
  /// When false the marking constraints are left out and the program
  /// describes any pattern-conforming level.
  bool require_unreachable = true;
  double solid_density = 0.35;
  /// Positive: Start lies in the top-left and Goal in the bottom-right
  /// square of this size.
  int endpoint_region = 0;
  /// Positive: the marked region holds at most this many cells, so one
  /// endpoint (picked by the seed) ends up sealed in a small pocket.
  int pocket_limit = 0;
};

EncodedProblem build_unsolvable_problem(int rows, int cols, const MovementTemplate& movement,
                                        const PatternRules& patterns, std::uint64_t seed,
                                        const GenerationOptions& options = {});

/// Reads the tile variables of a full assignment back into a level.
Level decode_level(const VarMap& vars, std::span<const std::uint8_t> assignment, std::string domain = "custom");

}  // namespace levelrepair
