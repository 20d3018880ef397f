#include "sqlsv/hir/hir.hpp"

#include "sqlsv/errors.hpp"
#include "sqlsv/sql/parser.hpp"

namespace sqlsv::hir {

ExprAst parse_attr(const plan::LpNode& node) {
  using plan::LpOp;
  switch (node.op) {
    case LpOp::Scan:
      return sql::parse_table_name(node.attr);
    case LpOp::Filter:
    case LpOp::Join:
    case LpOp::Limit:
      return sql::parse_expression(node.attr);
    case LpOp::Aggregate:
      return sql::parse_list(node.attr, sql::ListForm::Aggregate, "Aggregate");
    case LpOp::Project:
      return sql::parse_list(node.attr, sql::ListForm::SelectItems, "Project");
    case LpOp::Sort:
      return sql::parse_list(node.attr, sql::ListForm::OrderItems, "Sort");
  }
  throw ExprParseError(node.id, "unknown operator");
}

Hir build_hir(const plan::LogicalPlan& plan, const sql::Schema& /*schema*/) {
  Hir hir{plan, {}};
  hir.asts.reserve(plan.size());
  for (const auto& n : plan.nodes()) {
    try {
      hir.asts.push_back(parse_attr(n));
    } catch (const ExprParseError&) {
      throw;
    } catch (const Error& e) {
      throw ExprParseError(n.id, e.what());
    }
  }
  return hir;
}

nlohmann::json ast_to_json(const sql::SqlAst& ast) {
  nlohmann::json nodes = nlohmann::json::array();
  for (const auto& n : ast.nodes()) {
    nodes.push_back({{"id", n.id},
                     {"kind", sql::kind_name(n.kind)},
                     {"text", n.text},
                     {"children", n.children}});
  }
  return {{"root", ast.root()}, {"nodes", std::move(nodes)}};
}

nlohmann::json to_json(const Hir& hir) {
  nlohmann::json nodes = nlohmann::json::array();
  for (const auto& n : hir.plan.nodes()) {
    nlohmann::json jn{{"id", n.id},
                      {"op", plan::op_name(n.op)},
                      {"attr", n.attr},
                      {"inputs", n.inputs},
                      {"ast", ast_to_json(hir.asts.at(static_cast<std::size_t>(n.id)))}};
    if (!n.alias.empty()) jn["alias"] = n.alias;
    nodes.push_back(std::move(jn));
  }
  nlohmann::json edges = nlohmann::json::array();
  for (const auto& [child, parent] : hir.plan.edges()) edges.push_back({child, parent});
  return {{"root", hir.plan.root()}, {"nodes", std::move(nodes)}, {"edges", std::move(edges)}};
}

}  // namespace sqlsv::hir
