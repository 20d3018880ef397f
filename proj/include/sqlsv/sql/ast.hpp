#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace sqlsv::sql {

using NodeId = int;

enum class AstKind : std::uint8_t {
  Select,
  From,
  Join,
  Where,
  GroupBy,
  Having,
  OrderBy,
  Limit,
  Column,
  Table,
  Literal,
  BinaryOp,
  UnaryOp,
  FuncCall,
  Alias,
  Star,
  Subquery,
  // Synthetic root grouping a list-valued plan attribute (projection list,
  // sort keys, aggregate list). Its text names the owning operator.
  List,
};

std::string_view kind_name(AstKind kind);
AstKind kind_from_name(std::string_view name);

bool is_leaf_kind(AstKind kind);

struct AstNode {
  NodeId id = 0;
  AstKind kind = AstKind::Literal;
  std::string text;
  std::vector<NodeId> children;

  friend bool operator==(const AstNode&, const AstNode&) = default;
};

// Immutable tree. Node ids equal their index in `nodes` and are assigned in
// pre-order, so the root is always node 0.
class SqlAst {
 public:
  SqlAst() = default;

  NodeId root() const { return 0; }
  const std::vector<AstNode>& nodes() const { return nodes_; }
  const AstNode& node(NodeId id) const { return nodes_.at(static_cast<std::size_t>(id)); }
  std::size_t size() const { return nodes_.size(); }
  bool empty() const { return nodes_.empty(); }

  // Parent of each node, -1 for the root.
  std::vector<NodeId> parents() const;

  // Copy with one node's text replaced; structure and ids are unchanged.
  SqlAst with_text(NodeId id, std::string text) const;

  friend bool operator==(const SqlAst&, const SqlAst&) = default;

  // Builder representation used while parsing; flattened in pre-order.
  struct Tree {
    AstKind kind = AstKind::Literal;
    std::string text;
    std::vector<Tree> children;
  };

  static SqlAst from_tree(const Tree& tree);
  Tree to_tree(NodeId id = 0) const;

 private:
  std::vector<AstNode> nodes_;
};

// Structural validation of kind arity rules; throws LoweringError on failure.
void check_arity(const SqlAst& ast);

bool is_aggregate_name(std::string_view name);

// Indented multi-line dump, one node per line.
std::string debug_string(const SqlAst& ast);

}  // namespace sqlsv::sql
