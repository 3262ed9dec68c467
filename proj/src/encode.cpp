#include "levelrepair/encode.hpp"

#include <cstdlib>

#include "levelrepair/error.hpp"
#include "levelrepair/rng.hpp"

namespace levelrepair {
namespace {

constexpr double kAuxPriority = 1e12;

VarMap allocate_tiles(ConstraintProgram& prog, int rows, int cols) {
  VarMap vars;
  vars.rows = rows;
  vars.cols = cols;
  vars.tile.resize(static_cast<std::size_t>(rows) * cols);
  for (auto& cell : vars.tile)
    for (auto& v : cell) v = prog.make_var();
  return vars;
}

// One kind per cell plus the adjacency rules.
void add_tile_structure(ConstraintProgram& prog, const VarMap& vars, const PatternRules& patterns) {
  for (const auto& cell : vars.tile) {
    std::vector<Literal> lits;
    for (VarId v : cell) lits.push_back(pos(v));
    prog.cnstr_count(lits, 1, 1);
  }
  auto add_pair_rules = [&](Cell a, Cell b, bool horizontal) {
    for (TileKind ka : kAllTileKinds) {
      std::vector<Literal> allowed;
      for (TileKind kb : kAllTileKinds)
        if (horizontal ? patterns.allows_horizontal(ka, kb) : patterns.allows_vertical(ka, kb))
          allowed.push_back(vars.tile_lit(b, kb));
      const auto premise = vars.tile_lit(a, ka);
      if (allowed.size() == kAllTileKinds.size()) continue;
      if (allowed.empty()) {
        prog.cnstr_count(std::span<const Literal>(&premise, 1), 0, 0);
        continue;
      }
      prog.cnstr_implies_disj(premise, allowed);
    }
  };
  for (int r = 0; r < vars.rows; ++r) {
    for (int c = 0; c < vars.cols; ++c) {
      if (c + 1 < vars.cols) add_pair_rules({r, c}, {r, c + 1}, true);
      if (r + 1 < vars.rows) add_pair_rules({r, c}, {r + 1, c}, false);
    }
  }
}

void add_exactly_one_of_kind(ConstraintProgram& prog, const VarMap& vars, TileKind kind) {
  std::vector<Literal> lits;
  for (const auto& cell : vars.tile) lits.push_back(pos(cell[static_cast<int>(kind)]));
  prog.cnstr_count(lits, 1, 1);
}

// Literals that must all hold for `rule` to fire from `from`, or nullopt when
// a required cell falls outside the grid.
std::optional<std::vector<Literal>> move_conditions(const VarMap& vars, const MoveRule& rule, Cell from) {
  std::vector<Literal> conds;
  for (auto o : rule.open) {
    Cell c{from.row + o.dr, from.col + o.dc};
    if (!vars.in_bounds(c)) return std::nullopt;
    conds.push_back(~vars.tile_lit(c, TileKind::Solid));
  }
  for (auto o : rule.solid) {
    Cell c{from.row + o.dr, from.col + o.dc};
    if (!vars.in_bounds(c)) return std::nullopt;
    conds.push_back(vars.tile_lit(c, TileKind::Solid));
  }
  return conds;
}

void force(ConstraintProgram& prog, Literal lit) { prog.cnstr_count(std::span<const Literal>(&lit, 1), 1, 1); }

void add_layered_reachability(ConstraintProgram& prog, VarMap& vars, const MovementTemplate& movement, Cell start,
                              Cell goal, int horizon) {
  const auto n_cells = vars.tile.size();
  vars.reach.assign(static_cast<std::size_t>(horizon) + 1, std::vector<VarId>(n_cells));
  for (auto& layer : vars.reach)
    for (auto& v : layer) {
      v = prog.make_var();
      prog.set_priority(v, kAuxPriority);
    }
  for (std::size_t i = 0; i < n_cells; ++i) {
    const Literal lit = pos(vars.reach[0][i]);
    if (i == vars.cell_index(start))
      force(prog, lit);
    else
      prog.cnstr_count(std::span<const Literal>(&lit, 1), 0, 0);
  }

  // Predecessor moves into every cell, with their tile conditions.
  std::vector<std::vector<std::pair<std::size_t, std::vector<Literal>>>> incoming(n_cells);
  for (int r = 0; r < vars.rows; ++r) {
    for (int c = 0; c < vars.cols; ++c) {
      for (const auto& rule : movement.rules) {
        Cell dest{r + rule.delta.dr, c + rule.delta.dc};
        if (!vars.in_bounds(dest)) continue;
        auto conds = move_conditions(vars, rule, {r, c});
        if (!conds) continue;
        incoming[vars.cell_index(dest)].emplace_back(vars.cell_index({r, c}), std::move(*conds));
      }
    }
  }

  for (int k = 1; k <= horizon; ++k) {
    for (std::size_t v = 0; v < n_cells; ++v) {
      std::vector<Literal> support{pos(vars.reach[k - 1][v])};
      for (const auto& [u, conds] : incoming[v]) {
        std::vector<Literal> conj{pos(vars.reach[k - 1][u])};
        conj.insert(conj.end(), conds.begin(), conds.end());
        const Literal kappa = prog.make_conj(conj);
        prog.set_priority(kappa.var, kAuxPriority);
        support.push_back(kappa);
      }
      prog.cnstr_implies_disj(pos(vars.reach[k][v]), support);
    }
  }
  force(prog, pos(vars.reach[horizon][vars.cell_index(goal)]));
}

}  // namespace

EncodedProblem build_repair_problem(const Level& level, const WeightGrid& weights, const MovementTemplate& movement,
                                    const PatternRules& patterns, const RepairOptions& options) {
  if (weights.rows != level.rows() || weights.cols != level.cols() || weights.values.size() != level.size())
    throw Error(ErrorCode::DimensionMismatch, "weight grid does not match level");
  for (int w : weights.values)
    if (w <= 0) throw Error(ErrorCode::NonPositiveWeight, "cell weights must be positive");

  EncodedProblem out;
  auto& prog = out.program;
  auto grid = std::make_shared<GridAttachment>();
  grid->vars = allocate_tiles(prog, level.rows(), level.cols());
  auto& vars = grid->vars;
  grid->movement = movement;
  grid->domain = level.domain();
  grid->start = level.start();
  grid->goal = level.goal();
  grid->original = level.cells();
  grid->lazy_reachability = options.encoding == ReachEncoding::Lazy;

  for (std::size_t i = 0; i < level.size(); ++i)
    for (TileKind k : kAllTileKinds) {
      const VarId v = vars.tile[i][static_cast<int>(k)];
      prog.set_phase(v, level.cells()[i] == k);
      prog.set_priority(v, weights.values[i]);
    }

  add_tile_structure(prog, vars, patterns);

  // Endpoints stay where they are.
  force(prog, vars.tile_lit(level.start(), TileKind::Start));
  force(prog, vars.tile_lit(level.goal(), TileKind::Goal));
  add_exactly_one_of_kind(prog, vars, TileKind::Start);
  add_exactly_one_of_kind(prog, vars, TileKind::Goal);

  if (options.encoding == ReachEncoding::Layered) {
    const int horizon = options.horizon > 0 ? options.horizon : static_cast<int>(level.size());
    add_layered_reachability(prog, vars, movement, level.start(), level.goal(), horizon);
  }

  // Deviating from the original kind costs the cell's weight.
  grid->keep_var.resize(level.size());
  for (std::size_t i = 0; i < level.size(); ++i) {
    const Literal keep = pos(vars.tile[i][static_cast<int>(level.cells()[i])]);
    prog.cnstr_count(std::span<const Literal>(&keep, 1), 1, 1, static_cast<double>(weights.values[i]));
    const auto& rec = std::get<CountConstraint>(prog.bool_view().back());
    grid->keep_var[i] = rec.alpha;
  }

  out.grid = grid;
  prog.attach_grid(grid);
  return out;
}

EncodedProblem build_unsolvable_problem(int rows, int cols, const MovementTemplate& movement,
                                        const PatternRules& patterns, std::uint64_t seed,
                                        const GenerationOptions& options) {
  if (rows < 1 || cols < 1 || rows * cols < 2) throw Error(ErrorCode::InvalidArgument, "grid too small");
  const int region = options.endpoint_region;
  if (region < 0 || region > rows || region > cols)
    throw Error(ErrorCode::InvalidArgument, "endpoint region does not fit the grid");
  EncodedProblem out;
  auto& prog = out.program;
  auto grid = std::make_shared<GridAttachment>();
  grid->vars = allocate_tiles(prog, rows, cols);
  auto& vars = grid->vars;
  grid->movement = movement;
  grid->domain = patterns.domain;

  // Random starting point for the search and a small random objective, so
  // different seeds land on different levels.
  Rng rng(seed);
  const auto n_cells = vars.tile.size();
  std::size_t start_idx = 0;
  std::size_t goal_idx = 0;
  if (region > 0) {
    const auto r = static_cast<int>(rng.below(region));
    const auto c = static_cast<int>(rng.below(region));
    start_idx = vars.cell_index({r, c});
    goal_idx = vars.cell_index({rows - 1 - static_cast<int>(rng.below(region)),
                                cols - 1 - static_cast<int>(rng.below(region))});
    if (goal_idx == start_idx) throw Error(ErrorCode::InvalidArgument, "endpoint regions overlap");
  } else {
    start_idx = rng.below(n_cells);
    goal_idx = rng.below(n_cells - 1);
    if (goal_idx >= start_idx) ++goal_idx;
  }
  const bool pocket = options.require_unreachable && options.pocket_limit > 0;
  const bool confine_goal = pocket && rng.below(2) == 1;
  const auto confined = static_cast<int>(confine_goal ? goal_idx : start_idx);
  for (std::size_t i = 0; i < n_cells; ++i) {
    TileKind preferred = rng.uniform() < options.solid_density ? TileKind::Solid : TileKind::Empty;
    // Decide cells outward from the sealed endpoint so the pocket closes early.
    const int dist = std::abs(static_cast<int>(i) / cols - confined / cols) + std::abs(static_cast<int>(i) % cols - confined % cols);
    const double tile_priority = pocket ? 1.0 + dist : 1.0;
    if (i == start_idx) preferred = TileKind::Start;
    if (i == goal_idx) preferred = TileKind::Goal;
    for (TileKind k : kAllTileKinds) {
      const VarId v = vars.tile[i][static_cast<int>(k)];
      prog.set_phase(v, k == preferred);
      const bool endpoint = k == TileKind::Start || k == TileKind::Goal;
      prog.set_priority(v, endpoint ? 0.0 : tile_priority);
      prog.set_weight(v, static_cast<double>(rng.below(4)));
    }
  }

  add_tile_structure(prog, vars, patterns);
  add_exactly_one_of_kind(prog, vars, TileKind::Start);
  add_exactly_one_of_kind(prog, vars, TileKind::Goal);
  if (region > 0) {
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c) {
        const bool start_ok = r < region && c < region;
        const bool goal_ok = r >= rows - region && c >= cols - region;
        const Literal s = vars.tile_lit({r, c}, TileKind::Start);
        const Literal g = vars.tile_lit({r, c}, TileKind::Goal);
        if (!start_ok) prog.cnstr_count(std::span<const Literal>(&s, 1), 0, 0);
        if (!goal_ok) prog.cnstr_count(std::span<const Literal>(&g, 1), 0, 0);
      }
  }

  if (options.require_unreachable) {
    vars.mark.resize(n_cells);
    for (auto& m : vars.mark) {
      m = prog.make_var();
      prog.set_priority(m, 1e6);
    }
    const auto source = confine_goal ? TileKind::Goal : TileKind::Start;
    const auto sink = confine_goal ? TileKind::Start : TileKind::Goal;
    for (std::size_t i = 0; i < n_cells; ++i) {
      const Literal marked = pos(vars.mark[i]);
      const Literal unmarked = ~marked;
      prog.cnstr_implies_disj(pos(vars.tile[i][static_cast<int>(source)]), std::span(&marked, 1));
      prog.cnstr_implies_disj(pos(vars.tile[i][static_cast<int>(sink)]), std::span(&unmarked, 1));
    }
    // Marked cells are closed under every move (under every reversed move
    // when the goal is the one sealed in): m_u and the move's tile conditions
    // imply m_v, written as the clause m_u -> (not conds or m_v).
    for (int r = 0; r < rows; ++r) {
      for (int c = 0; c < cols; ++c) {
        for (const auto& rule : movement.rules) {
          Cell dest{r + rule.delta.dr, c + rule.delta.dc};
          if (!vars.in_bounds(dest)) continue;
          auto conds = move_conditions(vars, rule, {r, c});
          if (!conds) continue;
          std::vector<Literal> disj;
          for (const auto& l : *conds) disj.push_back(~l);
          auto from = vars.cell_index({r, c});
          auto to = vars.cell_index(dest);
          if (confine_goal) std::swap(from, to);
          disj.push_back(pos(vars.mark[to]));
          prog.cnstr_implies_disj(pos(vars.mark[from]), disj);
        }
      }
    }
    if (pocket) {
      std::vector<Literal> marks;
      for (VarId m : vars.mark) marks.push_back(pos(m));
      prog.cnstr_count(marks, 0, std::min<int>(options.pocket_limit, static_cast<int>(n_cells)));
    }
  }

  out.grid = grid;
  prog.attach_grid(grid);
  return out;
}

Level decode_level(const VarMap& vars, std::span<const std::uint8_t> assignment, std::string domain) {
  std::vector<TileKind> cells;
  cells.reserve(vars.tile.size());
  for (const auto& cell : vars.tile) {
    int found = -1;
    for (int k = 0; k < kNumChannels; ++k) {
      if (!assignment[cell[k]]) continue;
      if (found >= 0) throw Error(ErrorCode::AmbiguousCell, "assignment sets two kinds for one cell");
      found = k;
    }
    if (found < 0) throw Error(ErrorCode::AmbiguousCell, "assignment sets no kind for a cell");
    cells.push_back(static_cast<TileKind>(found));
  }
  return Level(vars.rows, vars.cols, std::move(cells), std::move(domain));
}

}  // namespace levelrepair
