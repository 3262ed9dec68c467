#include "levelrepair/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <mutex>
#include <numeric>
#include <queue>
#include <thread>

#include "levelrepair/encode.hpp"
#include "levelrepair/error.hpp"
#include "levelrepair/reachability.hpp"
#include "levelrepair/rng.hpp"

namespace levelrepair {
namespace {

using Clock = std::chrono::steady_clock;
constexpr double kTol = 1e-9;
constexpr std::uint32_t kNoVar = static_cast<std::uint32_t>(-1);

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct RowState {
  double lo;
  double hi;
  double min_act;
  double max_act;
  double max_abs;
};

struct Occurrence {
  std::uint32_t row;
  double coef;
};

struct GridMove {
  std::uint32_t dest;
  std::vector<std::uint32_t> open;
  std::vector<std::uint32_t> solid;
};

struct Decision {
  VarId var;
  std::uint8_t first;
  bool flipped;
  std::size_t trail_before;
  std::size_t cursor;
};

class Search {
 public:
  Search(const ConstraintProgram& program, const SolverConfig& config, std::stop_token cancel)
      : prog_(program), cfg_(config), cancel_(std::move(cancel)) {
    if (!(config.time_limit > 0.0)) throw Error(ErrorCode::InvalidArgument, "time limit must be positive");
    const auto n = prog_.num_vars();
    value_.assign(n, -1);
    occ_.resize(n);
    for (std::size_t r = 0; r < prog_.rows().size(); ++r) {
      const auto& row = prog_.rows()[r];
      if (std::isnan(row.lo) || std::isnan(row.hi) || row.lo > row.hi)
        throw Error(ErrorCode::MalformedProgram, "row " + std::to_string(r) + " has invalid bounds");
      RowState s{row.lo, row.hi, 0.0, 0.0, 0.0};
      for (const auto& t : row.terms) {
        if (t.var >= n || !std::isfinite(t.coef))
          throw Error(ErrorCode::MalformedProgram, "row " + std::to_string(r) + " has an invalid term");
        s.min_act += std::min(t.coef, 0.0);
        s.max_act += std::max(t.coef, 0.0);
        s.max_abs = std::max(s.max_abs, std::abs(t.coef));
        occ_[t.var].push_back({static_cast<std::uint32_t>(r), t.coef});
      }
      rows_.push_back(s);
    }
    in_queue_.assign(rows_.size(), 0);
    for (double c : prog_.weights()) {
      if (!std::isfinite(c)) throw Error(ErrorCode::MalformedProgram, "non-finite objective weight");
      neg_unfixed_ += std::min(c, 0.0);
    }
    build_order();
    setup_grid();
  }

  SolveResult run() {
    const auto t0 = Clock::now();
    deadline_ = t0 + std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(cfg_.time_limit));
    SolveResult result;
    result.config_id = cfg_.id;

    for (std::uint32_t r = 0; r < rows_.size(); ++r) enqueue(r);
    bool node_ok = propagate();
    std::vector<Decision> stack;
    enum class Stop { None, Time, Cancel, Found } stop = Stop::None;

    while (true) {
      ++nodes_;
      if (cancel_.stop_requested()) {
        stop = Stop::Cancel;
        break;
      }
      if ((nodes_ & 15) == 0 && Clock::now() >= deadline_) {
        stop = Stop::Time;
        break;
      }
      if (cfg_.node_limit && nodes_ > cfg_.node_limit) {
        stop = Stop::Time;
        break;
      }

      if (node_ok) {
        const std::size_t cursor = stack.empty() ? 0 : stack.back().cursor;
        auto [var, first, next_cursor, feasible] = choose(cursor);
        if (!feasible) {
          node_ok = false;
        } else if (var == kNoVar) {
          if (accept_leaf(result) && cfg_.first_solution) {
            stop = Stop::Found;
            break;
          }
          node_ok = false;
        } else {
          stack.push_back({var, first, false, trail_.size(), next_cursor});
          assign(var, first);
          node_ok = propagate();
          continue;
        }
      }

      // Backtrack to the most recent unflipped decision.
      bool resumed = false;
      while (!stack.empty()) {
        auto& d = stack.back();
        undo_to(d.trail_before);
        if (!d.flipped) {
          d.flipped = true;
          assign(d.var, static_cast<std::uint8_t>(1 - d.first));
          node_ok = propagate();
          resumed = true;
          break;
        }
        stack.pop_back();
      }
      if (!resumed) break;
    }

    result.nodes_explored = nodes_;
    result.wall_time = seconds_since(t0);
    if (best_) {
      result.assignment = best_assignment_;
      result.objective = *best_;
    }
    switch (stop) {
      case Stop::None: result.status = best_ ? SolveStatus::Optimal : SolveStatus::Infeasible; break;
      case Stop::Time: result.status = SolveStatus::Timeout; break;
      case Stop::Cancel: result.status = SolveStatus::Cancelled; break;
      case Stop::Found: result.status = SolveStatus::Feasible; break;
    }
    return result;
  }

 private:
  struct Choice {
    VarId var;
    std::uint8_t first;
    std::size_t cursor;
    bool feasible;
  };

  void build_order() {
    const auto n = prog_.num_vars();
    order_.resize(n);
    std::iota(order_.begin(), order_.end(), VarId{0});
    switch (cfg_.branching) {
      case Branching::InputOrder:
        break;
      case Branching::LowestWeightFirst: {
        Rng rng(cfg_.seed);
        std::vector<std::uint64_t> tie(n);
        for (auto& t : tie) t = cfg_.seed ? rng.next() : 0;
        std::stable_sort(order_.begin(), order_.end(), [&](VarId a, VarId b) {
          if (prog_.priority(a) != prog_.priority(b)) return prog_.priority(a) < prog_.priority(b);
          return tie[a] < tie[b];
        });
        break;
      }
      case Branching::MostConstrainedFirst: {
        // Static degree; weighting variables always last.
        std::stable_sort(order_.begin(), order_.end(), [&](VarId a, VarId b) {
          const bool wa = std::isinf(prog_.priority(a));
          const bool wb = std::isinf(prog_.priority(b));
          if (wa != wb) return wb;
          return occ_[a].size() > occ_[b].size();
        });
        break;
      }
    }
  }

  void setup_grid() {
    const auto* grid = prog_.grid();
    if (!grid || !grid->lazy_reachability) return;
    if (!cfg_.use_lazy_oracle)
      throw Error(ErrorCode::MalformedProgram, "program leaves reachability to the lazy oracle, which is disabled");
    grid_ = grid;
    const auto& vars = grid->vars;
    const auto n_cells = vars.tile.size();
    moves_from_.resize(n_cells);
    for (int r = 0; r < vars.rows; ++r) {
      for (int c = 0; c < vars.cols; ++c) {
        for (const auto& rule : grid->movement.rules) {
          Cell dest{r + rule.delta.dr, c + rule.delta.dc};
          if (!vars.in_bounds(dest)) continue;
          GridMove mv{static_cast<std::uint32_t>(vars.cell_index(dest)), {}, {}};
          bool ok = true;
          for (auto o : rule.open) {
            Cell x{r + o.dr, c + o.dc};
            if (!vars.in_bounds(x)) ok = false;
            else mv.open.push_back(static_cast<std::uint32_t>(vars.cell_index(x)));
          }
          for (auto o : rule.solid) {
            Cell x{r + o.dr, c + o.dc};
            if (!vars.in_bounds(x)) ok = false;
            else mv.solid.push_back(static_cast<std::uint32_t>(vars.cell_index(x)));
          }
          if (ok) moves_from_[vars.cell_index({r, c})].push_back(std::move(mv));
        }
      }
    }
  }

  void enqueue(std::uint32_t r) {
    if (in_queue_[r]) return;
    in_queue_[r] = 1;
    queue_.push_back(r);
  }

  void assign(VarId v, std::uint8_t val) {
    value_[v] = static_cast<std::int8_t>(val);
    trail_.push_back(v);
    const double c = prog_.weights()[v];
    neg_unfixed_ -= std::min(c, 0.0);
    if (val) fixed_obj_ += c;
    for (const auto& o : occ_[v]) {
      auto& s = rows_[o.row];
      s.min_act += o.coef * val - std::min(o.coef, 0.0);
      s.max_act += o.coef * val - std::max(o.coef, 0.0);
      enqueue(o.row);
    }
  }

  void undo_to(std::size_t size) {
    while (trail_.size() > size) {
      const VarId v = trail_.back();
      trail_.pop_back();
      const int val = value_[v];
      value_[v] = -1;
      const double c = prog_.weights()[v];
      neg_unfixed_ += std::min(c, 0.0);
      if (val) fixed_obj_ -= c;
      for (const auto& o : occ_[v]) {
        auto& s = rows_[o.row];
        s.min_act -= o.coef * val - std::min(o.coef, 0.0);
        s.max_act -= o.coef * val - std::max(o.coef, 0.0);
      }
    }
  }

  void clear_queue() {
    for (auto r : queue_) in_queue_[r] = 0;
    queue_.clear();
    qhead_ = 0;
  }

  // Fixes every variable whose other value would violate a row.
  bool propagate() {
    while (qhead_ < queue_.size()) {
      const auto r = queue_[qhead_++];
      in_queue_[r] = 0;
      auto& s = rows_[r];
      if (s.min_act > s.hi + kTol || s.max_act < s.lo - kTol) {
        clear_queue();
        return false;
      }
      if (s.min_act + s.max_abs <= s.hi + kTol && s.max_act - s.max_abs >= s.lo - kTol) continue;
      for (const auto& t : prog_.rows()[r].terms) {
        if (value_[t.var] >= 0) continue;
        const double a = t.coef;
        if (a > 0) {
          if (s.min_act + a > s.hi + kTol) assign(t.var, 0);
          else if (s.max_act - a < s.lo - kTol) assign(t.var, 1);
        } else {
          if (s.min_act - a > s.hi + kTol) assign(t.var, 1);
          else if (s.max_act + a < s.lo - kTol) assign(t.var, 0);
        }
      }
      if (s.min_act > s.hi + kTol || s.max_act < s.lo - kTol) {
        clear_queue();
        return false;
      }
    }
    queue_.clear();
    qhead_ = 0;
    return true;
  }

  // --- grid reachability reasoning (lazy programs only) ---

  VarId solid_var(std::uint32_t cell) const { return grid_->vars.tile[cell][static_cast<int>(TileKind::Solid)]; }

  double open_cost(std::uint32_t cell) const {
    const auto sv = value_[solid_var(cell)];
    if (sv == 1) return kInf;
    if (sv == 0 || is_traversable(grid_->original[cell])) return 0.0;
    const auto& keep = grid_->keep_var[cell];
    if (!keep || value_[*keep] == 1) return 0.0;
    return prog_.weights()[*keep];
  }

  bool move_possible(const GridMove& mv) const {
    for (auto c : mv.open)
      if (value_[solid_var(c)] == 1) return false;
    for (auto c : mv.solid)
      if (value_[solid_var(c)] == 0) return false;
    return true;
  }

  // Cheapest cost of opening a start-to-goal path given the current partial
  // assignment; each path cell is charged the weight of opening it once.
  double path_bound(std::vector<const GridMove*>* path) {
    const auto n = moves_from_.size();
    dist_.assign(n, kInf);
    via_.assign(n, nullptr);
    from_.assign(n, kNoVar);
    const auto start = static_cast<std::uint32_t>(grid_->vars.cell_index(grid_->start));
    const auto goal = static_cast<std::uint32_t>(grid_->vars.cell_index(grid_->goal));
    if (std::isinf(open_cost(start))) return kInf;
    using Item = std::pair<double, std::uint32_t>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
    dist_[start] = 0.0;
    pq.push({0.0, start});
    while (!pq.empty()) {
      auto [d, u] = pq.top();
      pq.pop();
      if (d > dist_[u]) continue;
      if (u == goal) break;
      for (const auto& mv : moves_from_[u]) {
        const double step = open_cost(mv.dest);
        if (std::isinf(step) || !move_possible(mv)) continue;
        if (d + step < dist_[mv.dest]) {
          dist_[mv.dest] = d + step;
          via_[mv.dest] = &mv;
          from_[mv.dest] = u;
          pq.push({d + step, mv.dest});
        }
      }
    }
    if (path && std::isfinite(dist_[goal])) {
      path->clear();
      for (auto c = goal; c != start; c = from_[c]) path->push_back(via_[c]);
      std::reverse(path->begin(), path->end());
    }
    return dist_[goal];
  }

  // Undecided cell on the cheapest path, decided toward what the path needs.
  // Prefers cells that must change from the original; the branching rule
  // picks among them (input order: nearest the start, lowest weight: cheapest,
  // most constrained: nearest the goal, where the path is pinned last).
  std::optional<std::pair<VarId, std::uint8_t>> path_decision(const std::vector<const GridMove*>& path) const {
    std::optional<std::pair<VarId, std::uint8_t>> commit;
    std::optional<std::pair<VarId, std::uint8_t>> change;
    double change_priority = kInf;
    auto consider = [&](std::uint32_t cell, bool need_open) {
      const VarId sv = solid_var(cell);
      if (value_[sv] >= 0) return;
      const std::pair<VarId, std::uint8_t> pick{sv, need_open ? 0 : 1};
      const bool differs = is_traversable(grid_->original[cell]) != need_open;
      if (!differs) {
        if (!commit) commit = pick;
        return;
      }
      switch (cfg_.branching) {
        case Branching::InputOrder:
          if (!change) change = pick;
          break;
        case Branching::LowestWeightFirst:
          if (!change || prog_.priority(sv) < change_priority) {
            change = pick;
            change_priority = prog_.priority(sv);
          }
          break;
        case Branching::MostConstrainedFirst:
          change = pick;
          break;
      }
    };
    for (const auto* mv : path) {
      for (auto c : mv->open) consider(c, true);
      for (auto c : mv->solid) consider(c, false);
    }
    return change ? change : commit;
  }

  Choice choose(std::size_t cursor) {
    double lb = fixed_obj_ + neg_unfixed_;
    if (best_ && lb >= *best_ - kTol) return {kNoVar, 0, cursor, false};
    if (grid_) {
      const double reach = path_bound(&path_);
      if (std::isinf(reach)) return {kNoVar, 0, cursor, false};
      lb += reach;
      if (best_ && lb >= *best_ - kTol) return {kNoVar, 0, cursor, false};
    }
    while (cursor < order_.size() && value_[order_[cursor]] >= 0) ++cursor;
    if (cursor == order_.size()) return {kNoVar, 0, cursor, true};
    if (grid_) {
      if (auto d = path_decision(path_)) return {d->first, d->second, cursor, true};
    }
    const VarId v = order_[cursor];
    return {v, prog_.phase(v), cursor, true};
  }

  bool accept_leaf(SolveResult& result) {
    std::vector<std::uint8_t> assignment(value_.begin(), value_.end());
    if (grid_) {
      try {
        const Level level = decode_level(grid_->vars, assignment, grid_->domain);
        if (!check_solvable(level, grid_->movement).solvable) return false;
      } catch (const Error&) {
        return false;
      }
    }
    const double obj = prog_.objective(assignment);
    if (best_ && obj >= *best_ - kTol) return false;
    best_ = obj;
    best_assignment_ = std::move(assignment);
    result.incumbent_history.push_back(obj);
    return true;
  }

  const ConstraintProgram& prog_;
  SolverConfig cfg_;
  std::stop_token cancel_;
  Clock::time_point deadline_;

  std::vector<std::int8_t> value_;
  std::vector<VarId> trail_;
  std::vector<RowState> rows_;
  std::vector<std::vector<Occurrence>> occ_;
  std::vector<std::uint32_t> queue_;
  std::size_t qhead_ = 0;
  std::vector<std::uint8_t> in_queue_;
  std::vector<VarId> order_;
  double fixed_obj_ = 0.0;
  double neg_unfixed_ = 0.0;
  std::uint64_t nodes_ = 0;

  std::optional<double> best_;
  std::vector<std::uint8_t> best_assignment_;

  const GridAttachment* grid_ = nullptr;
  std::vector<std::vector<GridMove>> moves_from_;
  std::vector<double> dist_;
  std::vector<const GridMove*> via_;
  std::vector<std::uint32_t> from_;
  std::vector<const GridMove*> path_;
};

}  // namespace

std::string_view to_string(Branching b) {
  switch (b) {
    case Branching::MostConstrainedFirst: return "most-constrained-first";
    case Branching::LowestWeightFirst: return "lowest-weight-first";
    case Branching::InputOrder: return "input-order";
  }
  return "?";
}

Branching parse_branching(std::string_view name) {
  for (auto b : {Branching::MostConstrainedFirst, Branching::LowestWeightFirst, Branching::InputOrder})
    if (to_string(b) == name) return b;
  throw Error(ErrorCode::InvalidArgument, "unknown branching rule '" + std::string(name) + "'");
}

std::string_view to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Optimal: return "Optimal";
    case SolveStatus::Infeasible: return "Infeasible";
    case SolveStatus::Timeout: return "Timeout";
    case SolveStatus::Feasible: return "Feasible";
    case SolveStatus::Cancelled: return "Cancelled";
  }
  return "?";
}

SolveStatus parse_solve_status(std::string_view name) {
  for (auto s : {SolveStatus::Optimal, SolveStatus::Infeasible, SolveStatus::Timeout, SolveStatus::Feasible,
                 SolveStatus::Cancelled})
    if (to_string(s) == name) return s;
  throw Error(ErrorCode::InvalidArgument, "unknown status '" + std::string(name) + "'");
}

SolveResult solve_bb(const ConstraintProgram& program, const SolverConfig& config, std::stop_token cancel) {
  Search search(program, config, std::move(cancel));
  return search.run();
}

SolveResult race(const ConstraintProgram& program, std::span<const SolverConfig> configs, double time_limit,
                 std::vector<SolveResult>* all_results) {
  if (configs.empty()) throw Error(ErrorCode::InvalidArgument, "race needs at least one solver config");
  auto limited = [&](SolverConfig cfg) {
    cfg.time_limit = std::min(cfg.time_limit, time_limit);
    return cfg;
  };
  if (configs.size() == 1) {
    auto r = solve_bb(program, limited(configs.front()));
    if (all_results) *all_results = {r};
    return r;
  }

  const auto t0 = Clock::now();
  std::stop_source stop;
  std::mutex winner_mutex;
  std::optional<SolveResult> winner;
  std::vector<SolveResult> results(configs.size());
  std::vector<std::exception_ptr> errors(configs.size());
  {
    std::vector<std::jthread> workers;
    workers.reserve(configs.size());
    for (std::size_t i = 0; i < configs.size(); ++i) {
      workers.emplace_back([&, i] {
        try {
          auto r = solve_bb(program, limited(configs[i]), stop.get_token());
          if (r.conclusive()) {
            std::lock_guard lock(winner_mutex);
            if (!winner) {
              winner = r;
              stop.request_stop();
            }
          }
          results[i] = std::move(r);
        } catch (...) {
          errors[i] = std::current_exception();
          stop.request_stop();
        }
      });
    }
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  if (all_results) *all_results = results;
  if (winner) {
    winner->wall_time = seconds_since(t0);
    return *winner;
  }
  // Nobody finished: report a timeout with the best incumbent seen.
  SolveResult out;
  out.status = SolveStatus::Timeout;
  for (const auto& r : results) {
    out.nodes_explored += r.nodes_explored;
    if (r.objective && (!out.objective || *r.objective < *out.objective)) {
      out.objective = r.objective;
      out.assignment = r.assignment;
      out.config_id = r.config_id;
    }
  }
  out.wall_time = seconds_since(t0);
  return out;
}

std::vector<SolverConfig> default_race_configs(double time_limit, std::uint64_t seed) {
  std::vector<SolverConfig> out;
  for (auto b : {Branching::LowestWeightFirst, Branching::MostConstrainedFirst, Branching::InputOrder}) {
    SolverConfig cfg;
    cfg.id = std::string(to_string(b));
    cfg.branching = b;
    cfg.time_limit = time_limit;
    cfg.seed = seed;
    out.push_back(cfg);
  }
  return out;
}

std::string solver_log_csv(std::span<const SolveResult> results) {
  std::string out = "config_id,status,objective,nodes,wall_time_s\n";
  char buf[256];
  for (const auto& r : results) {
    std::snprintf(buf, sizeof buf, "%s,%s,%s,%llu,%.6f\n", r.config_id.c_str(), std::string(to_string(r.status)).c_str(),
                  r.objective ? std::to_string(*r.objective).c_str() : "",
                  static_cast<unsigned long long>(r.nodes_explored), r.wall_time);
    out += buf;
  }
  return out;
}

}  // namespace levelrepair
