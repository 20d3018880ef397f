#pragma once

#include <vector>

#include "json.hpp"
#include "sqlsv/plan/logical_plan.hpp"
#include "sqlsv/sql/ast.hpp"

namespace sqlsv::hir {

// Expression tree attached to one LP node. Same representation as a statement
// AST; list-valued attributes hang under a List root named after the operator.
using ExprAst = sql::SqlAst;

// Logical plan plus one expression AST per plan node (indexed by LP node id).
struct Hir {
  plan::LogicalPlan plan;
  std::vector<ExprAst> asts;
};

// Parses every node attribute. Throws ExprParseError naming the LP node.
Hir build_hir(const plan::LogicalPlan& plan, const sql::Schema& schema);

// Parses the attribute of a single node according to its operator.
ExprAst parse_attr(const plan::LpNode& node);

nlohmann::json to_json(const Hir& hir);
nlohmann::json ast_to_json(const sql::SqlAst& ast);

}  // namespace sqlsv::hir
