#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "sqlsv/sql/ast.hpp"
#include "sqlsv/sql/schema.hpp"

namespace sqlsv::plan {

using NodeId = int;

enum class LpOp : std::uint8_t { Scan, Filter, Join, Aggregate, Project, Sort, Limit };

std::string_view op_name(LpOp op);
LpOp op_from_name(std::string_view name);

struct LpNode {
  NodeId id = 0;
  LpOp op = LpOp::Scan;
  // Filter predicate, join condition, aggregate list ("aggs GROUP BY keys"),
  // projection list, sort keys, limit count, or table name.
  std::string attr;
  std::vector<NodeId> inputs;  // Join: [left, right]; Scan: []; others: [child]
  // Query block this node belongs to. Derived tables get their own block.
  int block = 0;
  // Scan: table alias. Root of a derived-table block: the derived table name.
  std::string alias;
  // Join: verbatim join keyword ("INNER JOIN", "LEFT JOIN", ...).
  std::string join_type;
  // Filter above an Aggregate (lowered HAVING clause).
  bool having = false;

  friend bool operator==(const LpNode&, const LpNode&) = default;
};

// Operator DAG. Nodes are stored bottom-up (every input precedes its consumer),
// so node ids double as a topological order; the root is the last node.
class LogicalPlan {
 public:
  LogicalPlan() = default;
  LogicalPlan(std::vector<LpNode> nodes, std::map<sql::NodeId, NodeId> ast_owner);

  const std::vector<LpNode>& nodes() const { return nodes_; }
  const LpNode& node(NodeId id) const { return nodes_.at(static_cast<std::size_t>(id)); }
  std::size_t size() const { return nodes_.size(); }
  NodeId root() const { return static_cast<NodeId>(nodes_.size()) - 1; }

  // Data-flow edges as (child, parent) pairs.
  std::vector<std::pair<NodeId, NodeId>> edges() const;

  // Lowest LP node whose attribute derives from the given source-AST node, or
  // -1 when the AST node feeds no attribute (clause keywords, the Select root).
  NodeId owner_of(sql::NodeId ast_node) const;
  const std::map<sql::NodeId, NodeId>& ast_owner() const { return ast_owner_; }

  friend bool operator==(const LogicalPlan&, const LogicalPlan&) = default;

 private:
  std::vector<LpNode> nodes_;
  std::map<sql::NodeId, NodeId> ast_owner_;
};

// Canonical lowering: Scan -> Join (left-deep, FROM order) -> Filter(WHERE)
// -> Aggregate -> Filter(HAVING) -> Project -> Sort -> Limit.
LogicalPlan lower(const sql::SqlAst& ast, const sql::Schema& schema);

// Standalone SELECT computing the relation produced at `node`.
std::string render_subsql(const LogicalPlan& plan, NodeId node, const sql::Schema& schema);

// Indented `LogicalProject(...)`-style dump rooted at the plan root.
std::string print_plan(const LogicalPlan& plan);

}  // namespace sqlsv::plan
