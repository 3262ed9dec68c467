#include "levelrepair/program.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "levelrepair/error.hpp"

namespace levelrepair {
namespace {

constexpr double kFeasTol = 1e-9;

void check_weight(std::optional<double> w) {
  if (w && !(*w > 0.0 && std::isfinite(*w)))
    throw Error(ErrorCode::NonPositiveWeight, "soft constraint weight must be positive");
}

// Merges repeated variables and drops zero coefficients.
std::vector<Term> normalize(std::vector<Term> terms) {
  std::sort(terms.begin(), terms.end(), [](const Term& a, const Term& b) { return a.var < b.var; });
  std::vector<Term> out;
  for (const auto& t : terms) {
    if (!out.empty() && out.back().var == t.var)
      out.back().coef += t.coef;
    else
      out.push_back(t);
  }
  std::erase_if(out, [](const Term& t) { return t.coef == 0.0; });
  return out;
}

}  // namespace

LinearExpr polarity_sum(std::span<const Literal> lits) {
  std::vector<Term> terms;
  terms.reserve(lits.size());
  for (const auto& l : lits) terms.push_back({l.var, l.positive ? 1.0 : -1.0});
  return {normalize(std::move(terms)), 0.0};
}

int negativity_count(std::span<const Literal> lits) {
  return static_cast<int>(std::count_if(lits.begin(), lits.end(), [](const Literal& l) { return !l.positive; }));
}

VarId ConstraintProgram::make_var() {
  weights_.push_back(0.0);
  phase_.push_back(0);
  priority_.push_back(0.0);
  return static_cast<VarId>(weights_.size() - 1);
}

VarId ConstraintProgram::make_weighting_var(double w) {
  const VarId v = make_var();
  weights_[v] = w;
  priority_[v] = kInf;
  weighting_vars_.push_back(v);
  return v;
}

void ConstraintProgram::check_literals(std::span<const Literal> lits) const {
  for (const auto& l : lits)
    if (l.var >= num_vars())
      throw Error(ErrorCode::MalformedProgram, "literal refers to unallocated variable " + std::to_string(l.var));
}

Literal ConstraintProgram::make_conj(std::span<const Literal> lits) {
  if (lits.empty()) throw Error(ErrorCode::EmptyConjunction, "conjunction of no literals");
  check_literals(lits);
  const double n = static_cast<double>(lits.size());
  const double neg_count = negativity_count(lits);
  const VarId kappa = make_var();

  // |L| x_k - P(L) <= N(L)
  Row upper;
  upper.terms.push_back({kappa, n});
  for (const auto& l : lits) upper.terms.push_back({l.var, l.positive ? -1.0 : 1.0});
  upper.hi = neg_count;
  // -|L| x_k + P(L) <= |L| - 1 - N(L)
  Row lower;
  lower.terms.push_back({kappa, -n});
  for (const auto& l : lits) lower.terms.push_back({l.var, l.positive ? 1.0 : -1.0});
  lower.hi = n - 1.0 - neg_count;

  rows_.push_back({normalize(std::move(upper.terms)), upper.lo, upper.hi});
  rows_.push_back({normalize(std::move(lower.terms)), lower.lo, lower.hi});
  bool_view_.push_back(ConjConstraint{kappa, {lits.begin(), lits.end()}});
  return pos(kappa);
}

void ConstraintProgram::cnstr_implies_disj(Literal premise, std::span<const Literal> disjuncts,
                                           std::optional<double> weight) {
  if (disjuncts.empty()) throw Error(ErrorCode::EmptyDisjunction, "implication of an empty disjunction");
  check_weight(weight);
  check_literals(std::span<const Literal>(&premise, 1));
  check_literals(disjuncts);

  // P(i) - P(L) [- x_w] <= -N(i) + N(L)
  Row row;
  row.terms.push_back({premise.var, premise.positive ? 1.0 : -1.0});
  for (const auto& l : disjuncts) row.terms.push_back({l.var, l.positive ? -1.0 : 1.0});
  row.hi = -(premise.positive ? 0.0 : 1.0) + negativity_count(disjuncts);

  ImpliesDisjConstraint rec{premise, {disjuncts.begin(), disjuncts.end()}, weight, std::nullopt};
  if (weight) {
    const VarId omega = make_weighting_var(*weight);
    row.terms.push_back({omega, -1.0});
    rec.weight_var = omega;
  }
  row.terms = normalize(std::move(row.terms));
  rows_.push_back(std::move(row));
  bool_view_.push_back(std::move(rec));
}

void ConstraintProgram::cnstr_count(std::span<const Literal> lits, int lo, int hi, std::optional<double> weight) {
  const int n = static_cast<int>(lits.size());
  if (lo < 0 || lo > hi || hi > n)
    throw Error(ErrorCode::BadBounds, "count bounds [" + std::to_string(lo) + "," + std::to_string(hi) +
                                          "] invalid for " + std::to_string(n) + " literals");
  check_weight(weight);
  check_literals(lits);
  const double neg_count = negativity_count(lits);
  const auto p = polarity_sum(lits);
  CountConstraint rec{{lits.begin(), lits.end()}, lo, hi, weight, std::nullopt, std::nullopt};

  if (!weight) {
    // a - N(L) <= P(L) <= b - N(L)
    rows_.push_back({p.terms, lo - neg_count, hi - neg_count});
    bool_view_.push_back(std::move(rec));
    return;
  }

  // A side that no assignment can violate needs neither a row nor a
  // weighting variable.
  if (lo > 0) {
    const VarId alpha = make_weighting_var(*weight);
    Row row{p.terms, lo - neg_count, kInf};
    row.terms.push_back({alpha, static_cast<double>(n)});
    row.terms = normalize(std::move(row.terms));
    rows_.push_back(std::move(row));
    rec.alpha = alpha;
  }
  if (hi < n) {
    const VarId beta = make_weighting_var(*weight);
    Row row{p.terms, -kInf, hi - neg_count};
    row.terms.push_back({beta, -static_cast<double>(n)});
    row.terms = normalize(std::move(row.terms));
    rows_.push_back(std::move(row));
    rec.beta = beta;
  }
  bool_view_.push_back(std::move(rec));
}

void ConstraintProgram::add_row(Row row) {
  for (const auto& t : row.terms)
    if (t.var >= num_vars()) throw Error(ErrorCode::MalformedProgram, "row refers to unallocated variable");
  if (row.lo > row.hi) throw Error(ErrorCode::MalformedProgram, "row lower bound exceeds upper bound");
  row.terms = normalize(std::move(row.terms));
  rows_.push_back(std::move(row));
  bool_view_complete_ = false;
}

void ConstraintProgram::set_weight(VarId v, double w) {
  if (v >= num_vars()) throw Error(ErrorCode::MalformedProgram, "weight for unallocated variable");
  weights_[v] = w;
}

double ConstraintProgram::objective(std::span<const std::uint8_t> assignment) const {
  double obj = 0.0;
  for (std::size_t v = 0; v < weights_.size(); ++v)
    if (assignment[v]) obj += weights_[v];
  return obj;
}

bool ConstraintProgram::satisfies_rows(std::span<const std::uint8_t> assignment) const {
  if (assignment.size() != num_vars()) return false;
  for (const auto& row : rows_) {
    double act = 0.0;
    for (const auto& t : row.terms) act += t.coef * assignment[t.var];
    if (act < row.lo - kFeasTol || act > row.hi + kFeasTol) return false;
  }
  return true;
}

}  // namespace levelrepair
