#pragma once

#include <string>

#include "levelrepair/program.hpp"

namespace levelrepair {

/// CPLEX LP text with variables named x0..xN.
std::string export_lp(const ConstraintProgram& program);

/// Weighted DIMACS built from the program's Boolean view. Throws
/// UnsupportedConstruct for programs without one and for weights that are
/// not non-negative integers.
std::string export_wcnf(const ConstraintProgram& program);

/// Variables, weights and rows as JSON, for inspection.
std::string program_to_json(const ConstraintProgram& program);

}  // namespace levelrepair
