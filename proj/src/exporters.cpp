#include "levelrepair/exporters.hpp"

#include <charconv>
#include <cmath>
#include <optional>
#include <unordered_set>
#include <variant>

#include <json.hpp>

#include "levelrepair/error.hpp"

namespace levelrepair {
namespace {

std::string num(double v) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

std::string lp_terms(const std::vector<Term>& terms) {
  std::string out;
  for (std::size_t i = 0; i < terms.size(); ++i) {
    const double c = terms[i].coef;
    if (i > 0) out += ' ';
    if (c < 0) out += i == 0 ? "-" : "- ";
    else if (i > 0) out += "+ ";
    if (std::abs(c) != 1.0) out += num(std::abs(c)) + ' ';
    out += 'x' + std::to_string(terms[i].var);
  }
  return out;
}

// --- weighted CNF ---

using Clause = std::vector<int>;

int dimacs(Literal l) { return l.positive ? static_cast<int>(l.var) + 1 : -(static_cast<int>(l.var) + 1); }

class CnfBuilder {
 public:
  explicit CnfBuilder(std::size_t num_vars) : next_var_(static_cast<int>(num_vars)) {}

  int fresh() { return ++next_var_; }
  int num_vars() const { return next_var_; }

  // At most k of `lits` true, as a sequential counter.
  std::vector<Clause> at_most(const std::vector<int>& lits, int k) {
    const int n = static_cast<int>(lits.size());
    std::vector<Clause> out;
    if (k >= n) return out;
    if (k == 0) {
      for (int x : lits) out.push_back({-x});
      return out;
    }
    if (k == n - 1) {
      Clause c;
      for (int x : lits) c.push_back(-x);
      out.push_back(c);
      return out;
    }
    std::vector<std::vector<int>> s(n - 1, std::vector<int>(k));
    for (auto& reg : s)
      for (auto& v : reg) v = fresh();
    out.push_back({-lits[0], s[0][0]});
    for (int j = 1; j < k; ++j) out.push_back({-s[0][j]});
    for (int i = 1; i < n - 1; ++i) {
      out.push_back({-lits[i], s[i][0]});
      out.push_back({-s[i - 1][0], s[i][0]});
      for (int j = 1; j < k; ++j) {
        out.push_back({-lits[i], -s[i - 1][j - 1], s[i][j]});
        out.push_back({-s[i - 1][j], s[i][j]});
      }
      out.push_back({-lits[i], -s[i - 1][k - 1]});
    }
    out.push_back({-lits[n - 1], -s[n - 2][k - 1]});
    return out;
  }

  void hard(Clause c) { clauses_.push_back({std::nullopt, std::move(c)}); }
  void soft(long long w, Clause c) { clauses_.push_back({w, std::move(c)}); }

  // Clauses that may be violated at cost `w`.
  void soft_group(long long w, std::vector<Clause> group) {
    if (group.empty()) return;
    if (group.size() == 1) {
      soft(w, std::move(group.front()));
      return;
    }
    const int r = fresh();
    for (auto& c : group) {
      c.push_back(-r);
      hard(std::move(c));
    }
    soft(w, {r});
  }

  std::string render() const {
    long long top = 1;
    for (const auto& [w, c] : clauses_)
      if (w) top += *w;
    std::string out = "p wcnf " + std::to_string(next_var_) + ' ' + std::to_string(clauses_.size()) + ' ' +
                      std::to_string(top) + '\n';
    for (const auto& [w, c] : clauses_) {
      out += std::to_string(w ? *w : top);
      for (int x : c) out += ' ' + std::to_string(x);
      out += " 0\n";
    }
    return out;
  }

 private:
  int next_var_;
  std::vector<std::pair<std::optional<long long>, Clause>> clauses_;
};

long long integer_weight(double w) {
  if (!(w >= 0) || w != std::floor(w) || w > 1e15)
    throw Error(ErrorCode::UnsupportedConstruct, "weighted CNF needs non-negative integer weights, got " + num(w));
  return static_cast<long long>(w);
}

std::vector<Clause> count_clauses(CnfBuilder& cnf, const CountConstraint& c, bool lower_side) {
  std::vector<int> lits;
  const int n = static_cast<int>(c.lits.size());
  for (const auto& l : c.lits) lits.push_back(lower_side ? -dimacs(l) : dimacs(l));
  // at least lo of L == at most n - lo of the negations
  return cnf.at_most(lits, lower_side ? n - c.lo : c.hi);
}

}  // namespace

std::string export_lp(const ConstraintProgram& program) {
  std::vector<Term> obj;
  for (std::size_t v = 0; v < program.num_vars(); ++v)
    if (program.weights()[v] != 0.0) obj.push_back({static_cast<VarId>(v), program.weights()[v]});
  std::string out = "Minimize\n obj: " + lp_terms(obj) + "\nSubject To\n";
  for (std::size_t r = 0; r < program.rows().size(); ++r) {
    const auto& row = program.rows()[r];
    if (row.terms.empty()) continue;
    const std::string name = " c" + std::to_string(r);
    const std::string lhs = lp_terms(row.terms);
    const bool has_lo = std::isfinite(row.lo);
    const bool has_hi = std::isfinite(row.hi);
    if (has_lo && has_hi && row.lo == row.hi) {
      out += name + ": " + lhs + " = " + num(row.hi) + '\n';
    } else if (has_lo && has_hi) {
      out += name + "_lo: " + lhs + " >= " + num(row.lo) + '\n';
      out += name + "_hi: " + lhs + " <= " + num(row.hi) + '\n';
    } else if (has_hi) {
      out += name + ": " + lhs + " <= " + num(row.hi) + '\n';
    } else if (has_lo) {
      out += name + ": " + lhs + " >= " + num(row.lo) + '\n';
    }
  }
  if (program.num_vars() > 0) {
    out += "Bounds\n";
    for (std::size_t v = 0; v < program.num_vars(); ++v) out += " 0 <= x" + std::to_string(v) + " <= 1\n";
    out += "Generals\n";
    for (std::size_t v = 0; v < program.num_vars(); ++v) out += " x" + std::to_string(v) + '\n';
  }
  out += "End\n";
  return out;
}

std::string export_wcnf(const ConstraintProgram& program) {
  if (!program.has_bool_view())
    throw Error(ErrorCode::UnsupportedConstruct, "program has raw rows and no Boolean constraint view");
  CnfBuilder cnf(program.num_vars());
  for (const auto& con : program.bool_view()) {
    if (const auto* conj = std::get_if<ConjConstraint>(&con)) {
      const int out = static_cast<int>(conj->out) + 1;
      Clause back{out};
      for (const auto& l : conj->lits) {
        cnf.hard({-out, dimacs(l)});
        back.push_back(-dimacs(l));
      }
      cnf.hard(back);
    } else if (const auto* imp = std::get_if<ImpliesDisjConstraint>(&con)) {
      Clause c{-dimacs(imp->premise)};
      for (const auto& l : imp->disjuncts) c.push_back(dimacs(l));
      if (imp->weight) cnf.soft(integer_weight(*imp->weight), c);
      else cnf.hard(c);
    } else {
      const auto& cnt = std::get<CountConstraint>(con);
      const int n = static_cast<int>(cnt.lits.size());
      if (!cnt.weight) {
        for (auto& c : count_clauses(cnf, cnt, true)) cnf.hard(std::move(c));
        for (auto& c : count_clauses(cnf, cnt, false)) cnf.hard(std::move(c));
        continue;
      }
      const long long w = integer_weight(*cnt.weight);
      if (cnt.lo > 0) cnf.soft_group(w, count_clauses(cnf, cnt, true));
      if (cnt.hi < n) cnf.soft_group(w, count_clauses(cnf, cnt, false));
    }
  }
  const auto& weighting = program.weighting_vars();
  const std::unordered_set<VarId> is_weighting(weighting.begin(), weighting.end());
  for (std::size_t v = 0; v < program.num_vars(); ++v) {
    const double w = program.weights()[v];
    if (w == 0.0 || is_weighting.count(static_cast<VarId>(v))) continue;
    cnf.soft(integer_weight(w), {-(static_cast<int>(v) + 1)});
  }
  return cnf.render();
}

std::string program_to_json(const ConstraintProgram& program) {
  using nlohmann::json;
  auto bound = [](double b) { return std::isfinite(b) ? json(b) : json(nullptr); };
  json rows = json::array();
  for (const auto& row : program.rows()) {
    json terms = json::array();
    for (const auto& t : row.terms) terms.push_back({t.var, t.coef});
    rows.push_back({{"terms", terms}, {"lo", bound(row.lo)}, {"hi", bound(row.hi)}});
  }
  json doc{{"num_vars", program.num_vars()},
           {"weights", program.weights()},
           {"weighting_vars", program.weighting_vars()},
           {"rows", rows}};
  return doc.dump(1);
}

}  // namespace levelrepair
