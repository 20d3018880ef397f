#include "sqlsv/sql/render.hpp"

#include <string>

#include "sqlsv/errors.hpp"
#include "sqlsv/sql/schema.hpp"

namespace sqlsv::sql {

namespace {

constexpr int kPrimary = 10;

int binary_precedence(const std::string& op) {
  const auto up = to_upper(op);
  if (up == "OR") return 1;
  if (up == "AND") return 2;
  if (up == "||") return 7;
  if (up == "*" || up == "/" || up == "%") return 6;
  if (up == "+" || up == "-") return 5;
  return 4;  // comparisons, LIKE, IN
}

bool is_postfix(const std::string& op) {
  const auto up = to_upper(op);
  return up == "ASC" || up == "DESC" || up.rfind("IS", 0) == 0;
}

int precedence(const AstNode& n) {
  switch (n.kind) {
    case AstKind::BinaryOp:
      return binary_precedence(n.text);
    case AstKind::UnaryOp: {
      const auto up = to_upper(n.text);
      if (up == "ASC" || up == "DESC") return 0;
      if (up == "NOT") return 3;
      if (up.rfind("IS", 0) == 0) return 4;
      return 8;
    }
    default:
      return kPrimary;
  }
}

class Renderer {
 public:
  explicit Renderer(const SqlAst& ast) : ast_(ast) {}

  std::string run(NodeId id) { return rec(id); }

 private:
  std::string wrap(NodeId child, bool need) {
    auto s = rec(child);
    return need ? "(" + s + ")" : s;
  }

  std::string join_children(const AstNode& n, std::size_t from, std::size_t to,
                            const char* sep = ", ") {
    std::string out;
    for (std::size_t i = from; i < to; ++i) {
      if (i > from) out += sep;
      out += rec(n.children[i]);
    }
    return out;
  }

  std::string rec(NodeId id) {
    const auto& n = ast_.node(id);
    switch (n.kind) {
      case AstKind::Column:
      case AstKind::Table:
      case AstKind::Literal:
      case AstKind::Star:
        return n.text;
      case AstKind::BinaryOp: {
        const int p = precedence(n);
        const auto& lhs = ast_.node(n.children.at(0));
        const auto& rhs = ast_.node(n.children.at(1));
        return wrap(lhs.id, precedence(lhs) < p) + " " + n.text + " " +
               wrap(rhs.id, precedence(rhs) <= p);
      }
      case AstKind::UnaryOp: {
        const int p = precedence(n);
        const auto& operand = ast_.node(n.children.at(0));
        if (is_postfix(n.text)) {
          const bool need = p > 0 && precedence(operand) < p;
          return wrap(operand.id, need) + " " + n.text;
        }
        if (to_upper(n.text) == "NOT") {
          return n.text + " " + wrap(operand.id, precedence(operand) < p);
        }
        const bool need = precedence(operand) < p || operand.kind == AstKind::UnaryOp;
        return n.text + wrap(operand.id, need);
      }
      case AstKind::FuncCall:
        return n.text + "(" + join_children(n, 0, n.children.size()) + ")";
      case AstKind::Alias:
        return rec(n.children.at(0)) + " AS " + n.text;
      case AstKind::Subquery:
        return "(" + rec(n.children.at(0)) + ")";
      case AstKind::Select: {
        std::string out = n.text + " ";
        std::size_t i = 0;
        bool first = true;
        for (; i < n.children.size(); ++i) {
          const auto& c = ast_.node(n.children[i]);
          if (c.kind == AstKind::From) break;
          if (!first) out += ", ";
          out += rec(c.id);
          first = false;
        }
        for (; i < n.children.size(); ++i) out += " " + rec(n.children[i]);
        return out;
      }
      case AstKind::From: {
        std::string out = n.text;
        for (NodeId c : n.children) out += " " + rec(c);
        return out;
      }
      case AstKind::Join:
        return n.text + " " + rec(n.children.at(0)) + " ON " + rec(n.children.at(1));
      case AstKind::Where:
      case AstKind::Having:
        return n.text + " " + rec(n.children.at(0));
      case AstKind::GroupBy:
      case AstKind::OrderBy:
        return n.text + " " + join_children(n, 0, n.children.size());
      case AstKind::Limit:
        return n.text + " " + rec(n.children.at(0));
      case AstKind::List: {
        if (n.text == "Aggregate") {
          std::size_t split = 0;
          while (split < n.children.size()) {
            const auto& c = ast_.node(n.children[split]);
            if (c.kind != AstKind::FuncCall || !is_aggregate_name(c.text)) break;
            ++split;
          }
          std::string out = join_children(n, 0, split);
          if (split < n.children.size()) {
            if (!out.empty()) out += " ";
            out += "GROUP BY " + join_children(n, split, n.children.size());
          }
          return out;
        }
        return join_children(n, 0, n.children.size());
      }
    }
    throw Error("RenderError", "unhandled AST kind");
  }

  const SqlAst& ast_;
};

}  // namespace

std::string render(const SqlAst& ast) {
  if (ast.empty()) return {};
  return Renderer(ast).run(ast.root());
}

std::string render_node(const SqlAst& ast, NodeId id) { return Renderer(ast).run(id); }

}  // namespace sqlsv::sql
