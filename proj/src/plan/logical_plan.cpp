#include "sqlsv/plan/logical_plan.hpp"

#include <array>
#include <set>
#include <sstream>

#include "sqlsv/errors.hpp"
#include "sqlsv/sql/parser.hpp"
#include "sqlsv/sql/render.hpp"

namespace sqlsv::plan {

namespace {

using sql::AstKind;
using sql::SqlAst;

constexpr std::array<std::string_view, 7> kOpNames = {"Scan",    "Filter", "Join", "Aggregate",
                                                      "Project", "Sort",   "Limit"};

std::string join_strings(const std::vector<std::string>& parts, const char* sep = ", ") {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i > 0) out += sep;
    out += parts[i];
  }
  return out;
}

class Lowerer {
 public:
  Lowerer(const SqlAst& ast, const sql::Schema& schema) : ast_(ast), schema_(schema) {}

  LogicalPlan run() {
    if (ast_.empty() || ast_.node(ast_.root()).kind != AstKind::Select) {
      throw LoweringError("AST root is not a Select");
    }
    sql::check_arity(ast_);
    lower_select(ast_.root(), 0);
    return LogicalPlan(std::move(nodes_), std::move(owner_));
  }

 private:
  NodeId add(LpNode n) {
    n.id = static_cast<NodeId>(nodes_.size());
    nodes_.push_back(std::move(n));
    return nodes_.back().id;
  }

  void own(sql::NodeId ast_id, NodeId lp) {
    owner_.emplace(ast_id, lp);
    for (sql::NodeId c : ast_.node(ast_id).children) own(c, lp);
  }

  void collect_aggregates(sql::NodeId id, std::vector<sql::NodeId>& out) const {
    const auto& n = ast_.node(id);
    if (n.kind == AstKind::Subquery) return;
    if (n.kind == AstKind::FuncCall && sql::is_aggregate_name(n.text)) {
      out.push_back(id);
      return;
    }
    for (sql::NodeId c : n.children) collect_aggregates(c, out);
  }

  NodeId lower_from_item(sql::NodeId ref, int block) {
    const auto& n = ast_.node(ref);
    if (n.kind == AstKind::Table) return add_scan(n, "", block, ref);
    if (n.kind == AstKind::Alias) {
      const auto& inner = ast_.node(n.children.at(0));
      if (inner.kind == AstKind::Table) return add_scan(inner, n.text, block, ref);
      if (inner.kind == AstKind::Subquery) {
        const int inner_block = ++last_block_;
        const NodeId root = lower_select(inner.children.at(0), inner_block);
        nodes_[static_cast<std::size_t>(root)].alias = n.text;
        return root;
      }
    }
    throw LoweringError("unsupported FROM item of kind " + std::string(sql::kind_name(n.kind)));
  }

  NodeId add_scan(const sql::AstNode& table, const std::string& alias, int block,
                  sql::NodeId owner_root) {
    if (!schema_.tables().empty() && schema_.find_table(table.text) == nullptr) {
      throw LoweringError("table not in schema: " + table.text);
    }
    LpNode scan;
    scan.op = LpOp::Scan;
    scan.attr = table.text;
    scan.alias = alias;
    scan.block = block;
    const NodeId id = add(std::move(scan));
    own(owner_root, id);
    return id;
  }

  NodeId lower_select(sql::NodeId select_id, int block) {
    const auto& sel = ast_.node(select_id);
    std::vector<sql::NodeId> items;
    sql::NodeId from = -1, where = -1, group = -1, having = -1, order = -1, limit = -1;
    for (sql::NodeId c : sel.children) {
      switch (ast_.node(c).kind) {
        case AstKind::From: from = c; break;
        case AstKind::Where: where = c; break;
        case AstKind::GroupBy: group = c; break;
        case AstKind::Having: having = c; break;
        case AstKind::OrderBy: order = c; break;
        case AstKind::Limit: limit = c; break;
        default:
          if (from >= 0) throw LoweringError("select item after FROM");
          items.push_back(c);
      }
    }
    if (from < 0 || items.empty()) throw LoweringError("Select lacks FROM or projection");

    const auto& from_node = ast_.node(from);
    NodeId cur = lower_from_item(from_node.children.at(0), block);
    for (std::size_t i = 1; i < from_node.children.size(); ++i) {
      const auto& j = ast_.node(from_node.children[i]);
      if (j.kind != AstKind::Join || j.children.size() != 2) {
        throw LoweringError("malformed Join");
      }
      const NodeId right = lower_from_item(j.children[0], block);
      LpNode join;
      join.op = LpOp::Join;
      join.attr = sql::render_node(ast_, j.children[1]);
      join.inputs = {cur, right};
      join.block = block;
      join.join_type = j.text;
      cur = add(std::move(join));
      owner_.emplace(j.id, cur);
      own(j.children[1], cur);
    }

    if (where >= 0) cur = add_unary(LpOp::Filter, ast_.node(where).children.at(0), cur, block,
                                    {ast_.node(where).children.at(0)});

    std::vector<sql::NodeId> aggs;
    for (sql::NodeId it : items) collect_aggregates(it, aggs);
    if (having >= 0) collect_aggregates(having, aggs);
    if (order >= 0) collect_aggregates(order, aggs);
    if (!aggs.empty() || group >= 0) {
      std::vector<std::string> agg_text;
      std::set<std::string> seen;
      for (sql::NodeId a : aggs) {
        auto t = sql::render_node(ast_, a);
        if (seen.insert(t).second) agg_text.push_back(std::move(t));
      }
      std::string attr = join_strings(agg_text);
      std::vector<sql::NodeId> owned = aggs;
      if (group >= 0) {
        std::vector<std::string> keys;
        for (sql::NodeId k : ast_.node(group).children) {
          keys.push_back(sql::render_node(ast_, k));
          owned.push_back(k);
        }
        if (!attr.empty()) attr += " ";
        attr += "GROUP BY " + join_strings(keys);
      }
      LpNode agg;
      agg.op = LpOp::Aggregate;
      agg.attr = std::move(attr);
      agg.inputs = {cur};
      agg.block = block;
      cur = add(std::move(agg));
      for (sql::NodeId o : owned) own(o, cur);
    }

    if (having >= 0) {
      cur = add_unary(LpOp::Filter, ast_.node(having).children.at(0), cur, block,
                      {ast_.node(having).children.at(0)});
      nodes_.back().having = true;
    }

    {
      std::vector<std::string> parts;
      for (sql::NodeId it : items) parts.push_back(sql::render_node(ast_, it));
      LpNode proj;
      proj.op = LpOp::Project;
      proj.attr = join_strings(parts);
      proj.inputs = {cur};
      proj.block = block;
      cur = add(std::move(proj));
      for (sql::NodeId it : items) own(it, cur);
    }

    if (order >= 0) {
      std::vector<std::string> parts;
      for (sql::NodeId k : ast_.node(order).children) parts.push_back(sql::render_node(ast_, k));
      LpNode sort;
      sort.op = LpOp::Sort;
      sort.attr = join_strings(parts);
      sort.inputs = {cur};
      sort.block = block;
      cur = add(std::move(sort));
      for (sql::NodeId k : ast_.node(order).children) own(k, cur);
    }

    if (limit >= 0) {
      const auto count = ast_.node(limit).children.at(0);
      cur = add_unary(LpOp::Limit, count, cur, block, {count});
    }
    return cur;
  }

  NodeId add_unary(LpOp op, sql::NodeId expr, NodeId input, int block,
                   std::initializer_list<sql::NodeId> owned) {
    LpNode n;
    n.op = op;
    n.attr = sql::render_node(ast_, expr);
    n.inputs = {input};
    n.block = block;
    const NodeId id = add(std::move(n));
    for (sql::NodeId o : owned) own(o, id);
    return id;
  }

  const SqlAst& ast_;
  const sql::Schema& schema_;
  std::vector<LpNode> nodes_;
  std::map<sql::NodeId, NodeId> owner_;
  int last_block_ = 0;
};

struct Clauses {
  std::string from;
  std::string where;
  std::string having;
  std::string project;
  std::string order;
  std::string limit;
  std::vector<std::string> group_keys;
  std::vector<std::string> aggregates;
  bool has_aggregate = false;
};

std::string render_block(const LogicalPlan& plan, NodeId id);

Clauses collect(const LogicalPlan& plan, NodeId id, int block) {
  const auto& n = plan.node(id);
  if (n.block != block) {
    Clauses c;
    c.from = "(" + render_block(plan, id) + ") AS " + n.alias;
    return c;
  }
  switch (n.op) {
    case LpOp::Scan: {
      Clauses c;
      c.from = n.attr + (n.alias.empty() ? "" : " AS " + n.alias);
      return c;
    }
    case LpOp::Join: {
      Clauses c = collect(plan, n.inputs.at(0), block);
      const Clauses right = collect(plan, n.inputs.at(1), block);
      c.from += " " + n.join_type + " " + right.from + " ON " + n.attr;
      return c;
    }
    case LpOp::Filter: {
      Clauses c = collect(plan, n.inputs.at(0), block);
      (n.having ? c.having : c.where) = n.attr;
      return c;
    }
    case LpOp::Aggregate: {
      Clauses c = collect(plan, n.inputs.at(0), block);
      c.has_aggregate = true;
      const auto list = sql::parse_list(n.attr, sql::ListForm::Aggregate, "Aggregate");
      for (sql::NodeId item : list.node(list.root()).children) {
        const auto& node = list.node(item);
        auto text = sql::render_node(list, item);
        if (node.kind == AstKind::FuncCall && sql::is_aggregate_name(node.text)) {
          c.aggregates.push_back(std::move(text));
        } else {
          c.group_keys.push_back(std::move(text));
        }
      }
      return c;
    }
    case LpOp::Project: {
      Clauses c = collect(plan, n.inputs.at(0), block);
      c.project = n.attr;
      return c;
    }
    case LpOp::Sort: {
      Clauses c = collect(plan, n.inputs.at(0), block);
      c.order = n.attr;
      return c;
    }
    case LpOp::Limit: {
      Clauses c = collect(plan, n.inputs.at(0), block);
      c.limit = n.attr;
      return c;
    }
  }
  throw LoweringError("unknown operator");
}

std::string render_block(const LogicalPlan& plan, NodeId id) {
  const Clauses c = collect(plan, id, plan.node(id).block);
  std::string select_list;
  if (!c.project.empty()) {
    select_list = c.project;
  } else if (c.has_aggregate) {
    std::vector<std::string> cols = c.group_keys;
    cols.insert(cols.end(), c.aggregates.begin(), c.aggregates.end());
    select_list = join_strings(cols);
  } else {
    select_list = "*";
  }
  std::string out = "SELECT " + select_list + " FROM " + c.from;
  if (!c.where.empty()) out += " WHERE " + c.where;
  if (!c.group_keys.empty()) out += " GROUP BY " + join_strings(c.group_keys);
  if (!c.having.empty()) out += " HAVING " + c.having;
  if (!c.order.empty()) out += " ORDER BY " + c.order;
  if (!c.limit.empty()) out += " LIMIT " + c.limit;
  return out;
}

std::string describe(const LpNode& n) {
  switch (n.op) {
    case LpOp::Scan:
      return "LogicalTableScan(table=[[" + n.attr + "]]" +
             (n.alias.empty() ? "" : ", alias=[" + n.alias + "]") + ")";
    case LpOp::Filter:
      return std::string("LogicalFilter(condition=[") + n.attr + "]" +
             (n.having ? ", having=[true]" : "") + ")";
    case LpOp::Join: {
      const auto kind = sql::to_lower(n.join_type).rfind("left", 0) == 0 ? "left" : "inner";
      return "LogicalJoin(condition=[" + n.attr + "], joinType=[" + kind + "])";
    }
    case LpOp::Aggregate:
      return "LogicalAggregate(" + n.attr + ")";
    case LpOp::Project:
      return "LogicalProject(exprs=[" + n.attr + "])";
    case LpOp::Sort:
      return "LogicalSort(sort=[" + n.attr + "])";
    case LpOp::Limit:
      return "LogicalLimit(fetch=[" + n.attr + "])";
  }
  return {};
}

}  // namespace

std::string_view op_name(LpOp op) { return kOpNames.at(static_cast<std::size_t>(op)); }

LpOp op_from_name(std::string_view name) {
  for (std::size_t i = 0; i < kOpNames.size(); ++i) {
    if (kOpNames[i] == name) return static_cast<LpOp>(i);
  }
  throw LoweringError("unknown LP operator: " + std::string(name));
}

LogicalPlan::LogicalPlan(std::vector<LpNode> nodes, std::map<sql::NodeId, NodeId> ast_owner)
    : nodes_(std::move(nodes)), ast_owner_(std::move(ast_owner)) {
  if (nodes_.empty()) throw LoweringError("empty plan");
  std::vector<int> consumers(nodes_.size(), 0);
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const auto& n = nodes_[i];
    if (n.id != static_cast<NodeId>(i)) throw LoweringError("node ids must equal positions");
    const std::size_t want = n.op == LpOp::Join ? 2 : (n.op == LpOp::Scan ? 0 : 1);
    if (n.inputs.size() != want) {
      throw LoweringError("operator " + std::string(op_name(n.op)) + " has wrong input count");
    }
    for (NodeId in : n.inputs) {
      if (in < 0 || in >= n.id) throw LoweringError("inputs must precede consumers");
      ++consumers[static_cast<std::size_t>(in)];
    }
  }
  for (std::size_t i = 0; i + 1 < nodes_.size(); ++i) {
    if (consumers[i] == 0) throw LoweringError("plan has more than one root");
  }
}

std::vector<std::pair<NodeId, NodeId>> LogicalPlan::edges() const {
  std::vector<std::pair<NodeId, NodeId>> out;
  for (const auto& n : nodes_) {
    for (NodeId in : n.inputs) out.emplace_back(in, n.id);
  }
  return out;
}

NodeId LogicalPlan::owner_of(sql::NodeId ast_node) const {
  const auto it = ast_owner_.find(ast_node);
  return it == ast_owner_.end() ? -1 : it->second;
}

LogicalPlan lower(const sql::SqlAst& ast, const sql::Schema& schema) {
  return Lowerer(ast, schema).run();
}

std::string render_subsql(const LogicalPlan& plan, NodeId node, const sql::Schema& /*schema*/) {
  if (node < 0 || static_cast<std::size_t>(node) >= plan.size()) {
    throw LoweringError("no such LP node: " + std::to_string(node));
  }
  return render_block(plan, node);
}

std::string print_plan(const LogicalPlan& plan) {
  std::ostringstream os;
  auto rec = [&](auto&& self, NodeId id, int depth) -> void {
    os << std::string(static_cast<std::size_t>(depth) * 2, ' ') << describe(plan.node(id)) << '\n';
    for (NodeId in : plan.node(id).inputs) self(self, in, depth + 1);
  };
  rec(rec, plan.root(), 0);
  return os.str();
}

}  // namespace sqlsv::plan
