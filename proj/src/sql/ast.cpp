#include "sqlsv/sql/ast.hpp"

#include <array>
#include <sstream>

#include "sqlsv/errors.hpp"
#include "sqlsv/sql/schema.hpp"

namespace sqlsv::sql {

namespace {

constexpr std::array<std::string_view, 18> kKindNames = {
    "Select", "From",    "Join",     "Where", "GroupBy", "Having",
    "OrderBy", "Limit",  "Column",   "Table", "Literal", "BinaryOp",
    "UnaryOp", "FuncCall", "Alias",  "Star",  "Subquery", "List"};

void flatten(const SqlAst::Tree& tree, std::vector<AstNode>& out) {
  const auto id = static_cast<NodeId>(out.size());
  out.push_back(AstNode{id, tree.kind, tree.text, {}});
  std::vector<NodeId> kids;
  kids.reserve(tree.children.size());
  for (const auto& child : tree.children) {
    kids.push_back(static_cast<NodeId>(out.size()));
    flatten(child, out);
  }
  out[static_cast<std::size_t>(id)].children = std::move(kids);
}

}  // namespace

std::string_view kind_name(AstKind kind) {
  return kKindNames.at(static_cast<std::size_t>(kind));
}

AstKind kind_from_name(std::string_view name) {
  for (std::size_t i = 0; i < kKindNames.size(); ++i) {
    if (kKindNames[i] == name) return static_cast<AstKind>(i);
  }
  throw Error("UnknownKind", "unknown AST kind: " + std::string(name));
}

bool is_leaf_kind(AstKind kind) {
  return kind == AstKind::Column || kind == AstKind::Table || kind == AstKind::Literal ||
         kind == AstKind::Star;
}

std::vector<NodeId> SqlAst::parents() const {
  std::vector<NodeId> parent(nodes_.size(), -1);
  for (const auto& n : nodes_) {
    for (NodeId c : n.children) parent[static_cast<std::size_t>(c)] = n.id;
  }
  return parent;
}

SqlAst SqlAst::with_text(NodeId id, std::string text) const {
  SqlAst copy = *this;
  copy.nodes_.at(static_cast<std::size_t>(id)).text = std::move(text);
  return copy;
}

SqlAst SqlAst::from_tree(const Tree& tree) {
  SqlAst ast;
  flatten(tree, ast.nodes_);
  return ast;
}

SqlAst::Tree SqlAst::to_tree(NodeId id) const {
  const auto& n = node(id);
  Tree t{n.kind, n.text, {}};
  t.children.reserve(n.children.size());
  for (NodeId c : n.children) t.children.push_back(to_tree(c));
  return t;
}

void check_arity(const SqlAst& ast) {
  for (const auto& n : ast.nodes()) {
    const auto count = n.children.size();
    auto fail = [&](const char* what) {
      throw LoweringError("node " + std::to_string(n.id) + " (" +
                          std::string(kind_name(n.kind)) + "): " + what);
    };
    switch (n.kind) {
      case AstKind::BinaryOp:
        if (count != 2) fail("BinaryOp needs exactly 2 children");
        break;
      case AstKind::Alias:
      case AstKind::UnaryOp:
      case AstKind::Where:
      case AstKind::Having:
      case AstKind::Subquery:
        if (count != 1) fail("expected exactly 1 child");
        break;
      case AstKind::Join:
        if (count != 2) fail("Join needs a table and a condition");
        break;
      case AstKind::Column:
      case AstKind::Table:
      case AstKind::Literal:
      case AstKind::Star:
        if (count != 0) fail("leaf kind has children");
        if (n.text.empty()) fail("leaf kind has empty text");
        break;
      default:
        break;
    }
  }
}

bool is_aggregate_name(std::string_view name) {
  const auto up = to_upper(name);
  return up == "COUNT" || up == "SUM" || up == "AVG" || up == "MIN" || up == "MAX";
}

std::string debug_string(const SqlAst& ast) {
  std::ostringstream os;
  auto rec = [&](auto&& self, NodeId id, int depth) -> void {
    const auto& n = ast.node(id);
    os << std::string(static_cast<std::size_t>(depth) * 2, ' ') << kind_name(n.kind);
    if (!n.text.empty()) os << " '" << n.text << "'";
    os << '\n';
    for (NodeId c : n.children) self(self, c, depth + 1);
  };
  if (!ast.empty()) rec(rec, ast.root(), 0);
  return os.str();
}

}  // namespace sqlsv::sql
