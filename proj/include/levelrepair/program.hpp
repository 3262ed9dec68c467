#pragma once

#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <variant>
#include <vector>

namespace levelrepair {

using VarId = std::uint32_t;

struct Literal {
  VarId var = 0;
  bool positive = true;

  Literal operator~() const { return {var, !positive}; }
  bool operator==(const Literal&) const = default;
};

inline Literal pos(VarId v) { return {v, true}; }
inline Literal neg(VarId v) { return {v, false}; }

struct Term {
  VarId var = 0;
  double coef = 0.0;
  bool operator==(const Term&) const = default;
};

/// Sum of terms plus a constant.
struct LinearExpr {
  std::vector<Term> terms;
  double constant = 0.0;
};

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// lo <= sum(terms) <= hi; either side may be infinite.
struct Row {
  std::vector<Term> terms;
  double lo = -kInf;
  double hi = kInf;
};

/// P(L): +x for positive literals, -x for negative ones.
LinearExpr polarity_sum(std::span<const Literal> lits);
/// N(L): number of negative literals.
int negativity_count(std::span<const Literal> lits);

// Mid-level constraints as they were requested, kept alongside the MILP rows
// so the program can also be lowered to weighted CNF.
struct ConjConstraint {
  VarId out = 0;
  std::vector<Literal> lits;
};

struct ImpliesDisjConstraint {
  Literal premise;
  std::vector<Literal> disjuncts;
  std::optional<double> weight;
  std::optional<VarId> weight_var;
};

struct CountConstraint {
  std::vector<Literal> lits;
  int lo = 0;
  int hi = 0;
  std::optional<double> weight;
  std::optional<VarId> alpha;
  std::optional<VarId> beta;
};

using BoolConstraint = std::variant<ConjConstraint, ImpliesDisjConstraint, CountConstraint>;

/// Grid bookkeeping attached by the level problem builders. When `lazy` is
/// set, reachability is not encoded in rows and must be checked by the
/// solver against the movement template.
struct GridAttachment;

/// 0-1 program: minimise c'x subject to lo <= Ax <= hi, x in {0,1}^n.
class ConstraintProgram {
 public:
  VarId make_var();

  /// Positive literal on a fresh variable that equals the AND of `lits`.
  Literal make_conj(std::span<const Literal> lits);
  /// `premise` implies OR(`disjuncts`); soft with cost `weight` when given.
  void cnstr_implies_disj(Literal premise, std::span<const Literal> disjuncts,
                          std::optional<double> weight = std::nullopt);
  /// Between `lo` and `hi` (inclusive) of `lits` are true; soft when weighted.
  void cnstr_count(std::span<const Literal> lits, int lo, int hi, std::optional<double> weight = std::nullopt);

  /// Raw MILP row. Programs built this way lose their Boolean view.
  void add_row(Row row);
  void set_weight(VarId v, double w);

  std::size_t num_vars() const { return weights_.size(); }
  const std::vector<double>& weights() const { return weights_; }
  const std::vector<Row>& rows() const { return rows_; }
  const std::vector<BoolConstraint>& bool_view() const { return bool_view_; }
  bool has_bool_view() const { return bool_view_complete_; }
  /// Variables created as weighting variables of soft constraints.
  const std::vector<VarId>& weighting_vars() const { return weighting_vars_; }

  /// Preferred first value when the solver branches on `v`.
  void set_phase(VarId v, bool value) { phase_[v] = value ? 1 : 0; }
  std::uint8_t phase(VarId v) const { return phase_[v]; }
  /// Lower priority is branched on first by lowest-weight-first search.
  void set_priority(VarId v, double p) { priority_[v] = p; }
  double priority(VarId v) const { return priority_[v]; }

  void attach_grid(std::shared_ptr<const GridAttachment> grid) { grid_ = std::move(grid); }
  const GridAttachment* grid() const { return grid_.get(); }

  double objective(std::span<const std::uint8_t> assignment) const;
  /// True when every row holds.
  bool satisfies_rows(std::span<const std::uint8_t> assignment) const;

 private:
  VarId make_weighting_var(double w);
  void check_literals(std::span<const Literal> lits) const;

  std::vector<double> weights_;
  std::vector<std::uint8_t> phase_;
  std::vector<double> priority_;
  std::vector<Row> rows_;
  std::vector<BoolConstraint> bool_view_;
  std::vector<VarId> weighting_vars_;
  bool bool_view_complete_ = true;
  std::shared_ptr<const GridAttachment> grid_;
};

}  // namespace levelrepair
